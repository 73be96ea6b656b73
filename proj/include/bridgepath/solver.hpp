#pragma once

#include <Eigen/Core>
#include <cmath>
#include <utility>
#include <vector>

#include "bridgepath/errors.hpp"
#include "bridgepath/grouped.hpp"
#include "bridgepath/loss.hpp"
#include "bridgepath/penalty.hpp"
#include "bridgepath/threshold.hpp"

namespace bridgepath {

enum class Algorithm { apg, palm, cd };

/// Extrapolation anchor of the accelerated scheme. The reference form anchors
/// the accelerated difference at the current iterate; the literal form
/// anchors it one step back. Both are safeguarded by the monitor step.
enum class ApgVariant { reference, paper_literal };

struct SolverConfig {
  double step_safety = 0.9;     // alpha in (0,1), steps alpha / L
  double tol_rel = 1e-8;        // stop when theta and objective both settle
  int max_iter = 10000;
  ApgVariant variant = ApgVariant::reference;
  bool record_trace = true;

  void validate() const {
    require(step_safety > 0.0 && step_safety < 1.0, "SolverConfig: step_safety must lie in (0,1)");
    require(tol_rel > 0.0, "SolverConfig: tol_rel must be > 0");
    require(max_iter >= 1, "SolverConfig: max_iter must be >= 1");
  }
};

struct SolverResult {
  GroupedVector theta_hat;
  int iterations = 0;
  double objective = 0.0;
  bool converged = false;
  std::vector<double> objective_trace;  // objective at iterate 0,1,...,iterations
  std::vector<double> change_trace;     // max-abs step per iteration (0 at entry 0)
  // Largest relative objective increase observed between consecutive
  // iterates, max over t of (G_{t+1} - G_t) / (1 + |G_t|); descent holds
  // when this stays at roundoff level.
  double descent_violation = 0.0;
};

/// G(theta) = loss value + grouped weighted l^q penalty.
template <SmoothLoss L>
double objective_value(const L& loss, const PenaltySpec& penalty, const VectorXd& theta) {
  require(penalty.layout().total() == loss.layout().total(),
          "objective_value: penalty and loss disagree");
  return loss.value(theta) + penalty.value(theta);
}

template <SmoothLoss L>
double objective_value(const L& loss, const PenaltySpec& penalty, const GroupedVector& theta) {
  return objective_value(loss, penalty, theta.flat());
}

/// One proximal gradient update  T^q_{lambda s w}(theta - s grad L(theta)).
/// The zero vector is a fixed point of this map exactly when lambda is at or
/// above the critical penalty level.
template <SmoothLoss L>
VectorXd prox_gradient_step(const L& loss, const PenaltySpec& penalty, const VectorXd& theta,
                            double s) {
  const VectorXd z = theta - s * loss.gradient(theta);
  return vector_threshold(z, penalty.coordinate_q(),
                          (penalty.lambda() * s) * penalty.coordinate_weights());
}

/// One full PALM cycle over the blocks, thresholding each block after a
/// gradient step that already sees the blocks updated earlier in the cycle.
template <SmoothLoss L>
VectorXd palm_cycle(const L& loss, const PenaltySpec& penalty, VectorXd theta,
                    const std::vector<double>& block_steps) {
  const BlockLayout& lay = loss.layout();
  for (Index i = 0; i < lay.blocks(); ++i) {
    const double s = block_steps[static_cast<std::size_t>(i)];
    const VectorXd gi = block_gradient(loss, theta, i);
    const VectorXd z = theta.segment(lay.offset(i), lay.size(i)) - s * gi;
    const VectorXd lw = (penalty.lambda() * s) *
                        penalty.coordinate_weights().segment(lay.offset(i), lay.size(i));
    const double q = penalty.block_q()[i];
    for (Index k = 0; k < lay.size(i); ++k)
      theta[lay.offset(i) + k] = scalar_threshold({q, lw[k], 1.0}, z[k]);
  }
  return theta;
}

/// One coordinate-descent sweep: singleton-block PALM with per-coordinate
/// steps alpha / g_jj.
template <SmoothLoss L>
VectorXd cd_sweep(const L& loss, const PenaltySpec& penalty, VectorXd theta,
                  const VectorXd& coord_steps) {
  for (Index j = 0; j < theta.size(); ++j) {
    const double s = coord_steps[j];
    const double z = theta[j] - s * coordinate_gradient(loss, theta, j);
    theta[j] = scalar_threshold(
        {penalty.coordinate_q()[j], penalty.lambda() * s * penalty.coordinate_weights()[j], 1.0},
        z);
  }
  return theta;
}

namespace detail {

inline void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw non_finite_error(std::string("solver: non-finite ") + what);
}

struct ProgressTracker {
  explicit ProgressTracker(const SolverConfig& cfg, double obj0) : cfg(cfg), obj(obj0) {
    if (cfg.record_trace) {
      objective_trace.push_back(obj0);
      change_trace.push_back(0.0);
    }
  }

  /// Records one iterate; returns true when both relative changes settle.
  bool step(const VectorXd& theta_old, const VectorXd& theta_new, double obj_new) {
    check_finite(obj_new, "objective");
    const double dth = (theta_new - theta_old).cwiseAbs().maxCoeff() /
                       (1.0 + theta_old.cwiseAbs().maxCoeff());
    const double dobj = std::abs(obj_new - obj) / (1.0 + std::abs(obj));
    const double rise = (obj_new - obj) / (1.0 + std::abs(obj));
    if (rise > descent_violation) descent_violation = rise;
    if (cfg.record_trace) {
      objective_trace.push_back(obj_new);
      change_trace.push_back((theta_new - theta_old).cwiseAbs().maxCoeff());
    }
    obj = obj_new;
    return dth <= cfg.tol_rel && dobj <= cfg.tol_rel;
  }

  SolverResult finish(const BlockLayout& layout, VectorXd theta, int iters, bool converged) {
    SolverResult r;
    r.theta_hat = GroupedVector(layout, std::move(theta));
    r.iterations = iters;
    r.objective = obj;
    r.converged = converged;
    r.objective_trace = std::move(objective_trace);
    r.change_trace = std::move(change_trace);
    r.descent_violation = descent_violation;
    return r;
  }

  const SolverConfig& cfg;
  double obj;
  double descent_violation = 0.0;
  std::vector<double> objective_trace;
  std::vector<double> change_trace;
};

}  // namespace detail

/// Monotone accelerated proximal gradient descent. Each iteration forms an
/// extrapolated point, takes an accelerated proximal step there, takes a
/// plain monitor step from the current iterate, and keeps whichever has the
/// lower objective, so the objective never increases.
template <SmoothLoss L>
SolverResult apg_solve(const L& loss, const PenaltySpec& penalty, const GroupedVector& init,
                       const SolverConfig& cfg = {}) {
  cfg.validate();
  require(init.layout() == loss.layout(), "apg_solve: init layout mismatch");
  const double lips = global_lipschitz(loss);
  require(lips > 0.0, "apg_solve: Lipschitz bound must be positive");
  const double s = cfg.step_safety / lips;
  const double u = cfg.step_safety / lips;

  VectorXd th_prev = init.flat();
  VectorXd th = init.flat();
  VectorXd zeta = init.flat();
  double c_prev = 0.0, c = 1.0;

  detail::ProgressTracker track(cfg, objective_value(loss, penalty, th));
  detail::check_finite(track.obj, "objective at init");

  int t = 0;
  bool converged = false;
  for (t = 1; t <= cfg.max_iter; ++t) {
    const VectorXd& anchor = (cfg.variant == ApgVariant::paper_literal) ? th_prev : th;
    const VectorXd eta =
        th + (c_prev / c) * (zeta - anchor) + ((c_prev - 1.0) / c) * (th - th_prev);

    VectorXd zeta_next = prox_gradient_step(loss, penalty, eta, s);
    VectorXd monitor = prox_gradient_step(loss, penalty, th, u);
    const double g_zeta = objective_value(loss, penalty, zeta_next);
    const double g_mon = objective_value(loss, penalty, monitor);
    if (!std::isfinite(g_zeta) && !std::isfinite(g_mon))
      throw non_finite_error("apg_solve: both candidate objectives non-finite");

    const bool take_accel = std::isfinite(g_zeta) && g_zeta <= g_mon;
    VectorXd th_next = take_accel ? zeta_next : monitor;
    const double obj_next = take_accel ? g_zeta : g_mon;

    const bool done = track.step(th, th_next, obj_next);
    th_prev = std::move(th);
    th = std::move(th_next);
    zeta = std::move(zeta_next);
    c_prev = c;
    c = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * c * c));
    if (done) {
      converged = true;
      break;
    }
  }
  return track.finish(loss.layout(), std::move(th), std::min(t, cfg.max_iter), converged);
}

/// Blockwise proximal alternating minimization with per-block steps
/// alpha / L_i; one iteration is a full cycle over the blocks.
template <SmoothLoss L>
SolverResult palm_solve(const L& loss, const PenaltySpec& penalty, const GroupedVector& init,
                        const SolverConfig& cfg = {}) {
  cfg.validate();
  require(init.layout() == loss.layout(), "palm_solve: init layout mismatch");
  const BlockLayout& lay = loss.layout();
  std::vector<double> steps(static_cast<std::size_t>(lay.blocks()));
  for (Index i = 0; i < lay.blocks(); ++i) {
    const double li = block_lipschitz(loss, i);
    require(li > 0.0, "palm_solve: block Lipschitz bound must be positive");
    steps[static_cast<std::size_t>(i)] = cfg.step_safety / li;
  }

  VectorXd th = init.flat();
  detail::ProgressTracker track(cfg, objective_value(loss, penalty, th));
  detail::check_finite(track.obj, "objective at init");

  int t = 0;
  bool converged = false;
  for (t = 1; t <= cfg.max_iter; ++t) {
    VectorXd th_next = palm_cycle(loss, penalty, th, steps);
    const double obj_next = objective_value(loss, penalty, th_next);
    const bool done = track.step(th, th_next, obj_next);
    th = std::move(th_next);
    if (done) {
      converged = true;
      break;
    }
  }
  return track.finish(lay, std::move(th), std::min(t, cfg.max_iter), converged);
}

/// Coordinate descent: PALM with every coordinate its own block and steps
/// alpha / g_jj; one iteration is a full sweep.
template <SmoothLoss L>
SolverResult cd_solve(const L& loss, const PenaltySpec& penalty, const GroupedVector& init,
                      const SolverConfig& cfg = {}) {
  cfg.validate();
  require(init.layout() == loss.layout(), "cd_solve: init layout mismatch");
  const BlockLayout& lay = loss.layout();
  VectorXd steps(lay.total());
  for (Index j = 0; j < lay.total(); ++j) {
    const double lj = coordinate_lipschitz(loss, j);
    require(lj > 0.0, "cd_solve: coordinate Lipschitz bound must be positive");
    steps[j] = cfg.step_safety / lj;
  }

  VectorXd th = init.flat();
  detail::ProgressTracker track(cfg, objective_value(loss, penalty, th));
  detail::check_finite(track.obj, "objective at init");

  int t = 0;
  bool converged = false;
  for (t = 1; t <= cfg.max_iter; ++t) {
    VectorXd th_next = cd_sweep(loss, penalty, th, steps);
    const double obj_next = objective_value(loss, penalty, th_next);
    const bool done = track.step(th, th_next, obj_next);
    th = std::move(th_next);
    if (done) {
      converged = true;
      break;
    }
  }
  return track.finish(lay, std::move(th), std::min(t, cfg.max_iter), converged);
}

template <SmoothLoss L>
SolverResult solve(Algorithm algo, const L& loss, const PenaltySpec& penalty,
                   const GroupedVector& init, const SolverConfig& cfg = {}) {
  switch (algo) {
    case Algorithm::apg:
      return apg_solve(loss, penalty, init, cfg);
    case Algorithm::palm:
      return palm_solve(loss, penalty, init, cfg);
    case Algorithm::cd:
      return cd_solve(loss, penalty, init, cfg);
  }
  throw std::invalid_argument("solve: unknown algorithm");
}

}  // namespace bridgepath
