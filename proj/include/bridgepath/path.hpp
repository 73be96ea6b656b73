#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "bridgepath/errors.hpp"
#include "bridgepath/solver.hpp"

namespace bridgepath {

/// Smallest penalty level at which the zero vector is a fixed point of the
/// thresholded update maps, evaluated with steps approaching 1/l_eff from
/// below. Coordinates in q = 1 blocks contribute |grad_j L(0)| / w_j (and the
/// bound is tight); coordinates with q < 1 contribute
/// (|grad_j L(0)| / c_q)^{2-q} * l_eff^{q-1} / w_j, a sufficient level.
template <SmoothLoss L>
double lambda_max(const L& loss, const PenaltySpec& penalty, double l_eff) {
  require(penalty.layout().total() == loss.layout().total(),
          "lambda_max: penalty and loss disagree");
  require(l_eff > 0.0, "lambda_max: Lipschitz bound must be positive");
  const VectorXd g0 = loss.gradient(VectorXd::Zero(loss.layout().total()));
  const VectorXd& qs = penalty.coordinate_q();
  const VectorXd& w = penalty.coordinate_weights();
  double best = 0.0;
  for (Index j = 0; j < g0.size(); ++j) {
    const double a = std::abs(g0[j]);
    double cand;
    if (qs[j] == 1.0) {
      cand = a / w[j];
    } else if (a == 0.0) {
      cand = 0.0;
    } else {
      const double cq = threshold_location_coefficient(qs[j]);
      cand = std::pow(a / cq, 2.0 - qs[j]) * std::pow(l_eff, qs[j] - 1.0) / w[j];
    }
    if (cand > best) best = cand;
  }
  return best;
}

/// lambda_max with the Lipschitz constant matched to the algorithm: the
/// global bound for the accelerated solver, the smallest block bound for the
/// blockwise solver, the smallest coordinate bound for coordinate descent.
template <SmoothLoss L>
double lambda_max_for(const L& loss, const PenaltySpec& penalty, Algorithm algo) {
  double l_eff = global_lipschitz(loss);
  if (algo == Algorithm::palm) {
    for (Index i = 0; i < loss.layout().blocks(); ++i)
      l_eff = std::min(l_eff, block_lipschitz(loss, i));
  } else if (algo == Algorithm::cd) {
    for (Index j = 0; j < loss.layout().total(); ++j)
      l_eff = std::min(l_eff, coordinate_lipschitz(loss, j));
  }
  return lambda_max(loss, penalty, l_eff);
}

/// Geometric grid lambda_k = lambda_max * ratio^{k/(K-1)}, k = 0..K-1.
inline std::vector<double> make_grid(double lambda_max_value, int count, double ratio) {
  require(lambda_max_value > 0.0 && std::isfinite(lambda_max_value),
          "make_grid: lambda_max must be > 0");
  require(count >= 2, "make_grid: need at least two grid points");
  require(ratio > 0.0 && ratio < 1.0, "make_grid: ratio must lie in (0,1)");
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k)
    grid[static_cast<std::size_t>(k)] =
        lambda_max_value * std::pow(ratio, static_cast<double>(k) / (count - 1));
  return grid;
}

struct PathEntryMeta {
  int iterations = 0;
  double objective = 0.0;
  bool converged = false;
  bool failed = false;
  std::string error;
  double descent_violation = 0.0;
  std::vector<double> objective_trace;
};

struct PathResult {
  std::vector<double> lambdas;
  std::vector<GroupedVector> estimates;
  std::vector<PathEntryMeta> meta;
  double lambda_max = 0.0;
  PenaltySpec penalty_template;  // lambda slot of this copy is not meaningful
};

/// Solves the penalized problem over a descending lambda grid, warm starting
/// each level at the previous estimate (zero vector at the head). A failed
/// level is recorded and skipped for warm starting.
template <SmoothLoss L>
PathResult solve_path(const L& loss, const PenaltySpec& penalty_template,
                      const std::vector<double>& grid, Algorithm algo = Algorithm::apg,
                      const SolverConfig& cfg = {}) {
  require(!grid.empty(), "solve_path: empty grid");
  for (std::size_t k = 0; k + 1 < grid.size(); ++k)
    require(grid[k] > grid[k + 1], "solve_path: grid must be strictly decreasing");
  require(grid.back() >= 0.0, "solve_path: negative lambda");

  PathResult out;
  out.lambdas = grid;
  out.lambda_max = grid.front();
  out.penalty_template = penalty_template;
  out.estimates.reserve(grid.size());
  out.meta.reserve(grid.size());

  GroupedVector warm = GroupedVector::zero(loss.layout());
  for (double lam : grid) {
    const PenaltySpec pen = penalty_template.with_lambda(lam);
    PathEntryMeta meta;
    try {
      SolverResult res = solve(algo, loss, pen, warm, cfg);
      meta.iterations = res.iterations;
      meta.objective = res.objective;
      meta.converged = res.converged;
      meta.descent_violation = res.descent_violation;
      meta.objective_trace = std::move(res.objective_trace);
      warm = res.theta_hat;
      out.estimates.push_back(std::move(res.theta_hat));
    } catch (const std::exception& e) {
      meta.failed = true;
      meta.error = e.what();
      out.estimates.push_back(warm);  // last successful estimate stands in
    }
    out.meta.push_back(std::move(meta));
  }
  return out;
}

struct PathJump {
  std::size_t grid_index;  // index of the later (smaller-lambda) grid point
  Index coordinate;
  double magnitude_gap;
  bool entering;  // true: 0 -> nonzero as lambda decreases
};

struct PathDiagnostics {
  std::vector<Index> support_sizes;
  std::vector<std::vector<Index>> supports;
  std::vector<PathJump> jumps;
  std::size_t zero_prefix = 0;
};

/// Support patterns, discontinuities and the leading all-zero stretch of a
/// path. A coordinate in a q < 1 block jumps when it enters or leaves zero
/// between adjacent grid points with a magnitude gap above half the operator
/// jump size theta_{q, lambda w}; q = 1 coordinates move continuously and
/// never count.
inline PathDiagnostics path_diagnostics(const PathResult& path) {
  PathDiagnostics d;
  const PenaltySpec& pen = path.penalty_template;
  const VectorXd& qs = pen.coordinate_q();
  const VectorXd& w = pen.coordinate_weights();

  d.support_sizes.reserve(path.estimates.size());
  for (const GroupedVector& est : path.estimates) {
    std::vector<Index> support;
    for (Index j = 0; j < est.size(); ++j)
      if (est.flat()[j] != 0.0) support.push_back(j);
    d.support_sizes.push_back(static_cast<Index>(support.size()));
    d.supports.push_back(std::move(support));
  }

  d.zero_prefix = 0;
  while (d.zero_prefix < d.support_sizes.size() && d.support_sizes[d.zero_prefix] == 0)
    ++d.zero_prefix;

  auto jump_size = [&](Index j, double lam) {
    return threshold_constants(qs[j], lam * w[j]).theta_q_lam;
  };
  for (std::size_t k = 0; k + 1 < path.estimates.size(); ++k) {
    const VectorXd& a = path.estimates[k].flat();
    const VectorXd& b = path.estimates[k + 1].flat();
    for (Index j = 0; j < a.size(); ++j) {
      if (qs[j] == 1.0) continue;  // soft thresholding is continuous in lambda
      if (a[j] == 0.0 && b[j] != 0.0 && path.lambdas[k + 1] > 0.0) {
        const double gap = std::abs(b[j]);
        if (gap > 0.5 * jump_size(j, path.lambdas[k + 1]))
          d.jumps.push_back({k + 1, j, gap, true});
      } else if (a[j] != 0.0 && b[j] == 0.0 && path.lambdas[k] > 0.0) {
        const double gap = std::abs(a[j]);
        if (gap > 0.5 * jump_size(j, path.lambdas[k]))
          d.jumps.push_back({k + 1, j, gap, false});
      }
    }
  }
  return d;
}

}  // namespace bridgepath
