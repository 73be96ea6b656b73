// Shared test-only helpers: independent oracles the implementation is checked
// against, plus small random-instance generators. Nothing here calls into the
// code paths under test.
#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace testsupport {

inline double penalized_scalar_objective(double z, double lam_w, double q, double theta) {
  return 0.5 * (z - theta) * (z - theta) + lam_w * std::pow(std::abs(theta), q);
}

/// Grid minimizer of (1/2)(z-theta)^2 + lam_w |theta|^q over [-|z|, |z|] plus
/// the candidate 0: a coarse sweep at step 1e-3 followed by a 1e-6 refinement
/// around the coarse argmin. The objective has at most one interior local
/// minimum per sign, so the refinement sees the same basin a full fine grid
/// would.
inline double grid_oracle_min(double z, double lam_w, double q) {
  const double az = std::abs(z);
  auto v = [&](double th) { return penalized_scalar_objective(z, lam_w, q, th); };
  double best_v = v(0.0);
  double best_t = 0.0;
  const double coarse = 1e-3;
  const long nc = static_cast<long>(std::floor(2.0 * az / coarse));
  for (long i = 0; i <= nc; ++i) {
    const double th = -az + static_cast<double>(i) * coarse;
    const double val = v(th);
    if (val < best_v) {
      best_v = val;
      best_t = th;
    }
  }
  const double lo = std::max(-az, best_t - coarse);
  const double hi = std::min(az, best_t + coarse);
  const long nf = static_cast<long>(std::floor((hi - lo) / 1e-6));
  for (long i = 0; i <= nf; ++i) {
    const double val = v(lo + static_cast<double>(i) * 1e-6);
    if (val < best_v) best_v = val;
  }
  best_v = std::min({best_v, v(az), v(-az)});
  return best_v;
}

/// Random symmetric positive definite matrix with unit-scale entries.
inline Eigen::MatrixXd random_spd(Eigen::Index p, std::mt19937_64& rng, double ridge = 0.1) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd a(p, p);
  for (Eigen::Index r = 0; r < p; ++r)
    for (Eigen::Index c = 0; c < p; ++c) a(r, c) = gauss(rng);
  Eigen::MatrixXd g = a.transpose() * a / static_cast<double>(p);
  g.diagonal().array() += ridge;
  return g;
}

inline Eigen::VectorXd random_vector(Eigen::Index p, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, scale);
  Eigen::VectorXd v(p);
  for (Eigen::Index j = 0; j < p; ++j) v[j] = gauss(rng);
  return v;
}

/// From-scratch cyclic coordinate-descent lasso on the residual-sum-of-squares
/// form (1/2)||y - X theta||^2 + lam sum_j w_j |theta_j|, written directly
/// against the data with exact coordinate minimization.
inline Eigen::VectorXd cd_lasso_oracle(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                       double lam, const Eigen::VectorXd& w, int sweeps = 20000,
                                       double tol = 1e-12) {
  const Eigen::Index p = x.cols();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd resid = y;
  Eigen::VectorXd col_sq(p);
  for (Eigen::Index j = 0; j < p; ++j) col_sq[j] = x.col(j).squaredNorm();
  for (int s = 0; s < sweeps; ++s) {
    double max_move = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double old = theta[j];
      const double rho = x.col(j).dot(resid) + col_sq[j] * old;
      const double lw = lam * w[j];
      double next = 0.0;
      if (rho > lw)
        next = (rho - lw) / col_sq[j];
      else if (rho < -lw)
        next = (rho + lw) / col_sq[j];
      if (next != old) {
        resid -= (next - old) * x.col(j);
        theta[j] = next;
        max_move = std::max(max_move, std::abs(next - old));
      }
    }
    if (max_move <= tol) break;
  }
  return theta;
}

/// Exact one-sided binomial tail P(Bin(n, 1/2) >= k).
inline double binomial_tail_half(int k, int n) {
  if (k <= 0) return 1.0;
  if (k > n) return 0.0;
  double tail = 0.0;
  for (int j = k; j <= n; ++j) {
    double logc = std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0);
    tail += std::exp(logc - n * std::log(2.0));
  }
  return tail;
}

}  // namespace testsupport
