#pragma once

#include <Eigen/Core>
#include <cmath>

#include "bridgepath/errors.hpp"

namespace bridgepath {

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration from the normalized all-ones vector, converged to relative
/// 1e-8 between successive Rayleigh quotients and inflated by (1 + 1e-6) so
/// the result can serve as an upper bound in step-size rules. Falls back to
/// the row-sum bound max_i sum_j |g_ij| if 1e4 iterations do not converge.
inline double spectral_norm_upper_bound(const Eigen::MatrixXd& g) {
  require(g.rows() == g.cols() && g.rows() >= 1, "spectral_norm_upper_bound: square matrix required");
  const Eigen::Index p = g.rows();
  if (p == 1) return std::abs(g(0, 0)) * (1.0 + 1e-6);

  Eigen::VectorXd v = Eigen::VectorXd::Ones(p) / std::sqrt(static_cast<double>(p));
  double rayleigh = 0.0;
  for (int it = 0; it < 10000; ++it) {
    Eigen::VectorXd gv = g * v;
    const double norm = gv.norm();
    if (norm == 0.0) return 0.0;  // acting as zero on the iterate span
    v = gv / norm;
    const double next = v.dot(g * v);
    if (it > 0 && std::abs(next - rayleigh) <= 1e-8 * std::abs(next)) {
      return next * (1.0 + 1e-6);
    }
    rayleigh = next;
  }
  return g.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace bridgepath
