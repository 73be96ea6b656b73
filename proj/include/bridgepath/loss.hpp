#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <concepts>
#include <utility>
#include <vector>

#include "bridgepath/errors.hpp"
#include "bridgepath/grouped.hpp"
#include "bridgepath/spectral.hpp"

namespace bridgepath {

/// Contract for the smooth part of the objective: a C^1 function with a block
/// layout, value and gradient. Block gradients and Lipschitz bounds are
/// optional capabilities with generic fallbacks below.
template <class L>
concept SmoothLoss = requires(const L& l, const VectorXd& v) {
  { l.layout() } -> std::convertible_to<const BlockLayout&>;
  { l.value(v) } -> std::convertible_to<double>;
  { l.gradient(v) } -> std::convertible_to<VectorXd>;
};

template <class L>
concept HasBlockGradient = requires(const L& l, const VectorXd& v, Index i) {
  { l.block_gradient(v, i) } -> std::convertible_to<VectorXd>;
};

template <class L>
concept HasCoordinateGradient = requires(const L& l, const VectorXd& v, Index j) {
  { l.coordinate_gradient(v, j) } -> std::convertible_to<double>;
};

template <class L>
concept HasLipschitz = requires(const L& l) {
  { l.lipschitz() } -> std::convertible_to<double>;
};

template <class L>
concept HasBlockLipschitz = requires(const L& l, Index i) {
  { l.block_lipschitz(i) } -> std::convertible_to<double>;
};

template <class L>
concept HasCoordinateLipschitz = requires(const L& l, Index j) {
  { l.coordinate_lipschitz(j) } -> std::convertible_to<double>;
};

template <SmoothLoss L>
VectorXd block_gradient(const L& loss, const VectorXd& theta, Index i) {
  if constexpr (HasBlockGradient<L>) {
    return loss.block_gradient(theta, i);
  } else {
    const BlockLayout& lay = loss.layout();
    return loss.gradient(theta).segment(lay.offset(i), lay.size(i));
  }
}

template <SmoothLoss L>
double coordinate_gradient(const L& loss, const VectorXd& theta, Index j) {
  if constexpr (HasCoordinateGradient<L>) {
    return loss.coordinate_gradient(theta, j);
  } else {
    return loss.gradient(theta)[j];
  }
}

template <SmoothLoss L>
double global_lipschitz(const L& loss) {
  static_assert(HasLipschitz<L>, "loss provides no global Lipschitz bound");
  return loss.lipschitz();
}

template <SmoothLoss L>
double block_lipschitz(const L& loss, Index i) {
  if constexpr (HasBlockLipschitz<L>) {
    return loss.block_lipschitz(i);
  } else {
    static_assert(HasLipschitz<L>, "loss provides no Lipschitz bound");
    return loss.lipschitz();
  }
}

template <SmoothLoss L>
double coordinate_lipschitz(const L& loss, Index j) {
  if constexpr (HasCoordinateLipschitz<L>) {
    return loss.coordinate_lipschitz(j);
  } else {
    return block_lipschitz(loss, loss.layout().block_of(j));
  }
}

/// Read-only structured access to a symmetric matrix under a block layout:
/// row blocks G_i, single rows G_ij, principal submatrices and diagonals.
class BlockMatrixView {
 public:
  BlockMatrixView(const MatrixXd& g, const BlockLayout& layout) : g_(g), layout_(layout) {
    require(g.rows() == layout.total() && g.cols() == layout.total(),
            "BlockMatrixView: matrix does not match layout");
  }

  /// G_i: the p_i x p rows of block i.
  auto row_block(Index i) const { return g_.middleRows(layout_.offset(i), layout_.size(i)); }

  /// G_ij: row j (0-based) within block i.
  auto row(Index i, Index j) const { return g_.row(layout_.offset(i) + j); }

  /// Principal submatrix of block i.
  auto principal(Index i) const {
    return g_.block(layout_.offset(i), layout_.offset(i), layout_.size(i), layout_.size(i));
  }

  /// Diagonal entries of block i.
  VectorXd diagonal(Index i) const {
    return g_.diagonal().segment(layout_.offset(i), layout_.size(i));
  }

 private:
  const MatrixXd& g_;
  BlockLayout layout_;
};

/// Quadratic loss (1/2)(theta - theta_tilde)^T G (theta - theta_tilde) around
/// an initial estimator, with G symmetric positive definite. Lipschitz bounds
/// are the largest eigenvalues of G and of its principal block submatrices,
/// estimated by power iteration at construction.
class QuadraticLSALoss {
 public:
  QuadraticLSALoss(MatrixXd g, GroupedVector theta_tilde)
      : g_(std::move(g)),
        layout_(theta_tilde.layout()),
        theta_tilde_(std::move(theta_tilde).flat()) {
    require(g_.rows() == g_.cols(), "QuadraticLSALoss: G must be square");
    require(g_.rows() == layout_.total(), "QuadraticLSALoss: G does not match layout");
    const double scale = 1.0 + g_.cwiseAbs().maxCoeff();
    require((g_ - g_.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale,
            "QuadraticLSALoss: G must be symmetric");
    Eigen::LLT<MatrixXd> llt(g_);
    if (llt.info() != Eigen::Success)
      throw singular_matrix_error("QuadraticLSALoss: G is not positive definite");
    lipschitz_ = spectral_norm_upper_bound(g_);
    block_lipschitz_.resize(static_cast<std::size_t>(layout_.blocks()));
    const BlockMatrixView view(g_, layout_);
    for (Index i = 0; i < layout_.blocks(); ++i)
      block_lipschitz_[static_cast<std::size_t>(i)] =
          spectral_norm_upper_bound(view.principal(i));
  }

  QuadraticLSALoss(MatrixXd g, VectorXd theta_tilde)
      : QuadraticLSALoss(std::move(g),
                         GroupedVector(BlockLayout::single(theta_tilde.size()),
                                       std::move(theta_tilde))) {}

  const BlockLayout& layout() const { return layout_; }
  const MatrixXd& matrix() const { return g_; }
  const VectorXd& center() const { return theta_tilde_; }
  BlockMatrixView view() const { return BlockMatrixView(g_, layout_); }

  double value(const VectorXd& theta) const {
    check(theta);
    const VectorXd d = theta - theta_tilde_;
    return 0.5 * d.dot(g_ * d);
  }

  VectorXd gradient(const VectorXd& theta) const {
    check(theta);
    return g_ * (theta - theta_tilde_);
  }

  VectorXd block_gradient(const VectorXd& theta, Index i) const {
    check(theta);
    require(i >= 0 && i < layout_.blocks(), "QuadraticLSALoss: bad block index");
    return g_.middleRows(layout_.offset(i), layout_.size(i)) * (theta - theta_tilde_);
  }

  double coordinate_gradient(const VectorXd& theta, Index j) const {
    return g_.row(j).dot(theta - theta_tilde_);
  }

  double lipschitz() const { return lipschitz_; }
  double block_lipschitz(Index i) const {
    require(i >= 0 && i < layout_.blocks(), "QuadraticLSALoss: bad block index");
    return block_lipschitz_[static_cast<std::size_t>(i)];
  }
  double coordinate_lipschitz(Index j) const { return g_(j, j); }

  double value(const GroupedVector& theta) const { return value(theta.flat()); }
  VectorXd gradient(const GroupedVector& theta) const { return gradient(theta.flat()); }

 private:
  void check(const VectorXd& theta) const {
    require(theta.size() == layout_.total(), "QuadraticLSALoss: dimension mismatch");
  }

  MatrixXd g_;
  BlockLayout layout_;
  VectorXd theta_tilde_;
  double lipschitz_ = 0.0;
  std::vector<double> block_lipschitz_;
};

/// Least-squares loss (1/2)||y - X theta||^2 with the Gram matrix cached.
class RegressionLoss {
 public:
  RegressionLoss(MatrixXd x, VectorXd y, BlockLayout layout)
      : x_(std::move(x)), y_(std::move(y)), layout_(std::move(layout)) {
    require(x_.rows() == y_.size(), "RegressionLoss: X and y disagree");
    require(x_.cols() == layout_.total(), "RegressionLoss: layout does not match X");
    xtx_ = x_.transpose() * x_;
    xty_ = x_.transpose() * y_;
    lipschitz_ = spectral_norm_upper_bound(xtx_);
    block_lipschitz_.resize(static_cast<std::size_t>(layout_.blocks()));
    const BlockMatrixView view(xtx_, layout_);
    for (Index i = 0; i < layout_.blocks(); ++i)
      block_lipschitz_[static_cast<std::size_t>(i)] =
          spectral_norm_upper_bound(view.principal(i));
  }

  RegressionLoss(MatrixXd x, VectorXd y)
      : RegressionLoss(std::move(x), std::move(y), BlockLayout::single(x.cols())) {}

  const BlockLayout& layout() const { return layout_; }
  const MatrixXd& design() const { return x_; }
  const VectorXd& response() const { return y_; }
  const MatrixXd& gram() const { return xtx_; }

  double value(const VectorXd& theta) const {
    require(theta.size() == layout_.total(), "RegressionLoss: dimension mismatch");
    return 0.5 * (y_ - x_ * theta).squaredNorm();
  }

  VectorXd gradient(const VectorXd& theta) const {
    require(theta.size() == layout_.total(), "RegressionLoss: dimension mismatch");
    return xtx_ * theta - xty_;
  }

  VectorXd block_gradient(const VectorXd& theta, Index i) const {
    return xtx_.middleRows(layout_.offset(i), layout_.size(i)) * theta -
           xty_.segment(layout_.offset(i), layout_.size(i));
  }

  double coordinate_gradient(const VectorXd& theta, Index j) const {
    return xtx_.row(j).dot(theta) - xty_[j];
  }

  double lipschitz() const { return lipschitz_; }
  double block_lipschitz(Index i) const { return block_lipschitz_[static_cast<std::size_t>(i)]; }
  double coordinate_lipschitz(Index j) const { return xtx_(j, j); }

 private:
  MatrixXd x_;
  VectorXd y_;
  BlockLayout layout_;
  MatrixXd xtx_;
  VectorXd xty_;
  double lipschitz_ = 0.0;
  std::vector<double> block_lipschitz_;
};

}  // namespace bridgepath
