#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "bridgepath/errors.hpp"
#include "bridgepath/loss.hpp"
#include "bridgepath/parallel.hpp"
#include "bridgepath/path.hpp"

namespace bridgepath {

/// Gaussian linear model data: y = X theta0 + noise.
struct RegressionProblem {
  MatrixXd x;
  VectorXd y;
  VectorXd theta0;
  double sigma = 0.0;
};

enum class WeightsMode { unweighted, adaptive };

struct GlmConfig {
  Index n_train = 1000;
  Index n_test = 1000;
  Index p = 500;
  Index n_zero = 346;
  double sigma = 10.0;
  double rho = 0.5;
  double q = 0.5;        // bridge exponent
  int folds = 5;
  std::uint64_t seed = 1;
  int grid_size = 100;
  double grid_ratio = 1e-3;
  double coef_max = 10.0;
  double coef_min_mag = 0.5;
  int reps = 1;
  unsigned threads = 0;
  SolverConfig solver;
};

/// Rows are AR(1) Gaussian vectors: x_1 ~ N(0,1) and
/// x_j = rho x_{j-1} + sqrt(1-rho^2) xi_j, so Corr(x_i, x_j) = rho^{|i-j|}.
inline MatrixXd gen_design(Index n, Index p, double rho, std::mt19937_64& rng) {
  require(std::abs(rho) < 1.0, "gen_design: |rho| must be < 1");
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixXd x(n, p);
  const double fresh = std::sqrt(1.0 - rho * rho);
  for (Index r = 0; r < n; ++r) {
    x(r, 0) = gauss(rng);
    for (Index c = 1; c < p; ++c) x(r, c) = rho * x(r, c - 1) + fresh * gauss(rng);
  }
  return x;
}

/// Sparse coefficient vector: exactly n_zero zeros at random positions, the
/// rest uniform on [-max_mag, -min_mag] u [min_mag, max_mag].
inline VectorXd gen_sparse_coef(Index p, Index n_zero, double max_mag, double min_mag,
                                std::mt19937_64& rng) {
  require(n_zero >= 0 && n_zero < p, "gen_sparse_coef: need n_zero < p");
  require(max_mag >= min_mag && min_mag >= 0.0, "gen_sparse_coef: bad magnitude range");
  std::vector<Index> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  VectorXd theta = VectorXd::Zero(p);
  std::uniform_real_distribution<double> mag(min_mag, max_mag);
  std::uniform_int_distribution<int> sign(0, 1);
  for (Index k = n_zero; k < p; ++k) {
    const double m = mag(rng);
    theta[idx[static_cast<std::size_t>(k)]] = sign(rng) ? m : -m;
  }
  return theta;
}

inline RegressionProblem gen_regression(Index n, const VectorXd& theta0, double sigma, double rho,
                                        std::mt19937_64& rng) {
  RegressionProblem prob;
  prob.x = gen_design(n, theta0.size(), rho, rng);
  std::normal_distribution<double> gauss(0.0, 1.0);
  prob.y = prob.x * theta0;
  for (Index i = 0; i < n; ++i) prob.y[i] += sigma * gauss(rng);
  prob.theta0 = theta0;
  prob.sigma = sigma;
  return prob;
}

/// Ordinary least squares via the normal equations. When the Gram matrix
/// fails to factorize and jitter is allowed, retries with a 1e-8 ridge;
/// otherwise reports the singular design.
inline VectorXd ols_fit(const MatrixXd& x, const VectorXd& y, bool allow_jitter = false,
                        bool* used_jitter = nullptr) {
  MatrixXd gram = x.transpose() * x;
  const VectorXd rhs = x.transpose() * y;
  if (used_jitter) *used_jitter = false;
  Eigen::LLT<MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    if (!allow_jitter) throw singular_matrix_error("ols_fit: singular Gram matrix");
    gram.diagonal().array() += 1e-8;
    llt.compute(gram);
    if (llt.info() != Eigen::Success)
      throw singular_matrix_error("ols_fit: Gram matrix singular even with ridge jitter");
    if (used_jitter) *used_jitter = true;
  }
  return llt.solve(rhs);
}

/// One-step LLA weights: w_j = 1 / max(|theta_tilde_j|^{1-q}, 1e-12), so a
/// vanished initial estimate caps the weight at 1e12 and the coordinate is
/// effectively forced to zero.
inline VectorXd lla_weights(const VectorXd& theta_tilde, double q) {
  require(q > 0.0 && q <= 1.0, "lla_weights: q must lie in (0,1]");
  VectorXd w(theta_tilde.size());
  for (Index j = 0; j < w.size(); ++j)
    w[j] = 1.0 / std::max(std::pow(std::abs(theta_tilde[j]), 1.0 - q), 1e-12);
  return w;
}

/// Estimator description: exponent and weights (computed from an initial OLS
/// estimate when adaptive).
struct GlmEstimator {
  double q = 1.0;
  WeightsMode mode = WeightsMode::unweighted;
  double weight_exponent = 0.0;  // adaptive: w_j = 1/max(|ols_j|, eps)^expo
};

inline VectorXd estimator_weights(const GlmEstimator& est, const VectorXd& ols) {
  if (est.mode == WeightsMode::unweighted) return VectorXd::Ones(ols.size());
  VectorXd w(ols.size());
  for (Index j = 0; j < w.size(); ++j)
    w[j] = std::min(1.0 / std::pow(std::max(std::abs(ols[j]), 1e-10), est.weight_exponent), 1e12);
  return w;
}

struct GlmFit {
  PathResult path;
  VectorXd theta_tilde;  // OLS initial estimator
  double lambda_max = 0.0;
};

/// Penalized path on the quadratic approximation around the OLS estimator:
/// loss (1/2)(theta - theta_ols)^T X^T X (theta - theta_ols), which matches
/// the residual sum of squares up to a constant.
inline GlmFit fit_regression_path(const RegressionProblem& prob, double q, const VectorXd& weights,
                                  int grid_size, double grid_ratio,
                                  const SolverConfig& cfg = {}, bool allow_jitter = false,
                                  const std::vector<double>* fixed_grid = nullptr) {
  require(prob.x.rows() >= prob.x.cols(), "fit_regression_path: need n >= p for the OLS start");
  GlmFit fit;
  fit.theta_tilde = ols_fit(prob.x, prob.y, allow_jitter);
  QuadraticLSALoss loss(prob.x.transpose() * prob.x,
                        GroupedVector(BlockLayout::single(prob.x.cols()), fit.theta_tilde));
  PenaltySpec pen({PenaltyBlock{q, weights}}, 0.0);
  fit.lambda_max = lambda_max_for(loss, pen, Algorithm::apg);
  const std::vector<double> grid =
      fixed_grid ? *fixed_grid : make_grid(fit.lambda_max, grid_size, grid_ratio);
  fit.path = solve_path(loss, pen, grid, Algorithm::apg, cfg);
  return fit;
}

inline double prediction_mse(const MatrixXd& x, const VectorXd& y, const VectorXd& theta) {
  return (y - x * theta).squaredNorm() / static_cast<double>(y.size());
}

struct CvResult {
  std::vector<double> grid;
  VectorXd cv_mse;        // mean held-out MSE per lambda
  std::size_t chosen = 0; // arg-min index (ties to the larger lambda)
  double chosen_lambda = 0.0;
  bool ridge_fallback = false;
  double max_descent_violation = 0.0;  // over every fold solve
};

/// K-fold cross-validation of the penalized path for one estimator. The
/// lambda grid comes from the full training problem; adaptive weights are
/// recomputed from each fold's own OLS fit. Min-rule selection.
inline CvResult cross_validate(const RegressionProblem& prob, const GlmEstimator& est,
                               const std::vector<double>& grid, int folds, std::uint64_t seed,
                               const SolverConfig& cfg = {}) {
  require(folds >= 2, "cross_validate: need at least two folds");
  const Index n = prob.x.rows();
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);

  CvResult out;
  out.grid = grid;
  VectorXd sse = VectorXd::Zero(static_cast<Index>(grid.size()));

  for (int f = 0; f < folds; ++f) {
    const Index lo = n * f / folds, hi = n * (f + 1) / folds;
    const Index nv = hi - lo, nt = n - nv;
    MatrixXd xt(nt, prob.x.cols()), xv(nv, prob.x.cols());
    VectorXd yt(nt), yv(nv);
    Index it = 0, iv = 0;
    for (Index k = 0; k < n; ++k) {
      const Index row = idx[static_cast<std::size_t>(k)];
      if (k >= lo && k < hi) {
        xv.row(iv) = prob.x.row(row);
        yv[iv++] = prob.y[row];
      } else {
        xt.row(it) = prob.x.row(row);
        yt[it++] = prob.y[row];
      }
    }
    RegressionProblem sub{std::move(xt), std::move(yt), prob.theta0, prob.sigma};
    bool jitter = false;
    const VectorXd fold_ols = ols_fit(sub.x, sub.y, true, &jitter);
    out.ridge_fallback = out.ridge_fallback || jitter;
    const VectorXd w = estimator_weights(est, fold_ols);
    const GlmFit fit = fit_regression_path(sub, est.q, w, 0, 0.0, cfg, true, &grid);
    for (const PathEntryMeta& m : fit.path.meta)
      out.max_descent_violation = std::max(out.max_descent_violation, m.descent_violation);
    for (std::size_t k = 0; k < grid.size(); ++k)
      sse[static_cast<Index>(k)] +=
          (yv - xv * fit.path.estimates[k].flat()).squaredNorm();
  }
  out.cv_mse = sse / static_cast<double>(n);
  out.chosen = 0;
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (out.cv_mse[static_cast<Index>(k)] < out.cv_mse[static_cast<Index>(out.chosen)])
      out.chosen = k;
  out.chosen_lambda = grid[out.chosen];
  return out;
}

struct GlmEstimatorOutcome {
  double test_mse = 0.0;
  double chosen_lambda = 0.0;
  double lambda_max = 0.0;
  VectorXd estimate;
  CvResult cv;
  double max_descent_violation = 0.0;  // over the full-path and fold solves
};

struct GlmReplicate {
  GlmEstimatorOutcome bridge, lla, lasso;
};

struct GlmStudyResult {
  std::vector<GlmReplicate> replicates;
  double mean_bridge = 0.0, mean_lla = 0.0, mean_lasso = 0.0;
};

/// CV-selects and evaluates one estimator on a train/test replicate.
inline GlmEstimatorOutcome run_glm_estimator(const RegressionProblem& train, const MatrixXd& xtest,
                                             const VectorXd& ytest, const GlmEstimator& est,
                                             const GlmConfig& cfg) {
  const VectorXd ols = ols_fit(train.x, train.y);
  const VectorXd w = estimator_weights(est, ols);
  GlmFit fit = fit_regression_path(train, est.q, w, cfg.grid_size, cfg.grid_ratio, cfg.solver);
  GlmEstimatorOutcome out;
  out.lambda_max = fit.lambda_max;
  for (const PathEntryMeta& m : fit.path.meta)
    out.max_descent_violation = std::max(out.max_descent_violation, m.descent_violation);
  out.cv = cross_validate(train, est, fit.path.lambdas, cfg.folds, cfg.seed + 9001, cfg.solver);
  out.max_descent_violation = std::max(out.max_descent_violation, out.cv.max_descent_violation);
  out.chosen_lambda = out.cv.chosen_lambda;
  out.estimate = fit.path.estimates[out.cv.chosen].flat();
  out.test_mse = prediction_mse(xtest, ytest, out.estimate);
  return out;
}

/// One replicate of the three-estimator comparison: bridge (exponent q,
/// unweighted), one-step LLA (lasso with 1/|ols|^{1-q} weights) and lasso.
inline GlmReplicate run_glm_replicate(const GlmConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const VectorXd theta0 = gen_sparse_coef(cfg.p, cfg.n_zero, cfg.coef_max, cfg.coef_min_mag, rng);
  RegressionProblem train = gen_regression(cfg.n_train, theta0, cfg.sigma, cfg.rho, rng);
  RegressionProblem test = gen_regression(cfg.n_test, theta0, cfg.sigma, cfg.rho, rng);

  GlmReplicate rep;
  rep.bridge = run_glm_estimator(train, test.x, test.y,
                                 {cfg.q, WeightsMode::unweighted, 0.0}, cfg);
  rep.lla = run_glm_estimator(train, test.x, test.y,
                              {1.0, WeightsMode::adaptive, 1.0 - cfg.q}, cfg);
  rep.lasso = run_glm_estimator(train, test.x, test.y,
                                {1.0, WeightsMode::unweighted, 0.0}, cfg);
  return rep;
}

inline GlmStudyResult run_glm_study(const GlmConfig& cfg) {
  require(cfg.reps >= 1, "run_glm_study: need at least one replicate");
  GlmStudyResult out;
  out.replicates.resize(static_cast<std::size_t>(cfg.reps));
  parallel_for(static_cast<std::size_t>(cfg.reps), cfg.threads, [&](std::size_t r) {
    GlmConfig local = cfg;
    local.seed = cfg.seed + r;
    out.replicates[r] = run_glm_replicate(local, local.seed);
  });
  for (const GlmReplicate& r : out.replicates) {
    out.mean_bridge += r.bridge.test_mse;
    out.mean_lla += r.lla.test_mse;
    out.mean_lasso += r.lasso.test_mse;
  }
  const double n = static_cast<double>(cfg.reps);
  out.mean_bridge /= n;
  out.mean_lla /= n;
  out.mean_lasso /= n;
  return out;
}

}  // namespace bridgepath
