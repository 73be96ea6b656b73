#pragma once

#include <Eigen/Core>
#include <cmath>
#include <utility>
#include <vector>

#include "bridgepath/errors.hpp"
#include "bridgepath/grouped.hpp"

namespace bridgepath {

/// One penalty block: exponent q_i in (0,1] and strictly positive weights,
/// one per coordinate of the block.
struct PenaltyBlock {
  double q;
  VectorXd weights;
};

/// Grouped weighted l^q penalty  lambda * sum_i sum_j w^i_j |theta^i_j|^{q_i}.
/// The per-coordinate penalty level factorizes as lambda * w^i_j.
class PenaltySpec {
 public:
  PenaltySpec() = default;

  PenaltySpec(std::vector<PenaltyBlock> blocks, double lambda)
      : blocks_(std::move(blocks)), lambda_(lambda) {
    require(!blocks_.empty(), "PenaltySpec: need at least one block");
    require(lambda_ >= 0.0 && std::isfinite(lambda_), "PenaltySpec: lambda must be >= 0");
    std::vector<Index> sizes;
    for (const auto& b : blocks_) {
      require(b.q > 0.0 && b.q <= 1.0, "PenaltySpec: q must lie in (0,1]");
      require(b.weights.size() >= 1, "PenaltySpec: empty weight vector");
      require((b.weights.array() > 0.0).all() && b.weights.allFinite(),
              "PenaltySpec: weights must be positive and finite");
      sizes.push_back(b.weights.size());
    }
    layout_ = BlockLayout(std::move(sizes));
    q_flat_.resize(layout_.total());
    w_flat_.resize(layout_.total());
    block_q_.resize(layout_.blocks());
    for (Index i = 0; i < layout_.blocks(); ++i) {
      block_q_[i] = blocks_[static_cast<std::size_t>(i)].q;
      q_flat_.segment(layout_.offset(i), layout_.size(i)).setConstant(block_q_[i]);
      w_flat_.segment(layout_.offset(i), layout_.size(i)) =
          blocks_[static_cast<std::size_t>(i)].weights;
    }
  }

  /// Uniform helper: one block, constant weight 1, exponent q.
  static PenaltySpec uniform(Index p, double q, double lambda) {
    return PenaltySpec({PenaltyBlock{q, VectorXd::Ones(p)}}, lambda);
  }

  /// Same blocks and weights at a different global scale.
  PenaltySpec with_lambda(double lambda) const {
    PenaltySpec out(*this);
    require(lambda >= 0.0 && std::isfinite(lambda), "PenaltySpec: lambda must be >= 0");
    out.lambda_ = lambda;
    return out;
  }

  const std::vector<PenaltyBlock>& blocks() const { return blocks_; }
  const BlockLayout& layout() const { return layout_; }
  double lambda() const { return lambda_; }
  const VectorXd& coordinate_q() const { return q_flat_; }
  const VectorXd& coordinate_weights() const { return w_flat_; }
  const VectorXd& block_q() const { return block_q_; }

  /// lambda * sum_j w_j |theta_j|^{q_j} over the flat coordinate order.
  double value(const VectorXd& theta) const {
    require(theta.size() == layout_.total(), "PenaltySpec::value: dimension mismatch");
    double acc = 0.0;
    for (Index j = 0; j < theta.size(); ++j) {
      const double a = std::abs(theta[j]);
      if (a > 0.0) acc += w_flat_[j] * std::pow(a, q_flat_[j]);
    }
    return lambda_ * acc;
  }

  double value(const GroupedVector& theta) const { return value(theta.flat()); }

 private:
  std::vector<PenaltyBlock> blocks_;
  double lambda_ = 0.0;
  BlockLayout layout_;
  VectorXd q_flat_, w_flat_, block_q_;
};

}  // namespace bridgepath
