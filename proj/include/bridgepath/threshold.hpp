#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "bridgepath/errors.hpp"
#include "bridgepath/grouped.hpp"

namespace bridgepath {

/// Parameters of the scalar operator T^q_{lam*w}: exponent q in (0,1], global
/// scale lam >= 0 and a positive per-coordinate weight w. The effective
/// penalty level is lam*w.
struct ThresholdParams {
  double q;
  double lam;
  double w = 1.0;

  void validate() const {
    require(q > 0.0 && q <= 1.0, "ThresholdParams: q must lie in (0,1]");
    require(lam >= 0.0 && std::isfinite(lam), "ThresholdParams: lam must be >= 0");
    require(w > 0.0 && std::isfinite(w), "ThresholdParams: w must be > 0");
  }

  double effective() const { return lam * w; }
};

/// Jump magnitude theta_q_lam, threshold location t_q_lam and the lambda-free
/// coefficient c_q with t_q_lam = c_q * lam^{1/(2-q)}.
struct ThresholdConstants {
  double theta_q_lam;
  double t_q_lam;
  double c_q;
};

/// Coefficient c_q = [2(1-q)]^{1/(2-q)} (1 + q/(2(1-q))) of the threshold
/// location as a function of the penalty scale. Requires 0 < q < 1.
inline double threshold_location_coefficient(double q) {
  require(q > 0.0 && q < 1.0, "threshold_location_coefficient: q must lie in (0,1)");
  const double e = 1.0 / (2.0 - q);
  return std::pow(2.0 * (1.0 - q), e) * (1.0 + q / (2.0 * (1.0 - q)));
}

/// Constants of the scalar operator for exponent q in (0,1) and penalty
/// scale lam > 0:
///   theta = [2 lam (1-q)]^{1/(2-q)},  t = theta + lam q theta^{q-1}.
inline ThresholdConstants threshold_constants(double q, double lam) {
  require(q > 0.0 && q < 1.0, "threshold_constants: q must lie in (0,1)");
  require(lam > 0.0 && std::isfinite(lam), "threshold_constants: lam must be > 0");
  ThresholdConstants c;
  const double e = 1.0 / (2.0 - q);
  c.theta_q_lam = std::pow(2.0 * lam * (1.0 - q), e);
  c.t_q_lam = c.theta_q_lam + lam * q * std::pow(c.theta_q_lam, q - 1.0);
  c.c_q = threshold_location_coefficient(q);
  return c;
}

/// Larger root of  theta + lam q theta^{q-1} = z_abs  on (theta_q_lam, z_abs).
/// This is the branch on which the penalized quadratic attains its interior
/// minimum. The equation's left side is convex and increasing there, so
/// Newton started from z_abs decreases monotonically onto the root.
inline double solve_root(double q, double lam, double z_abs) {
  require(q > 0.0 && q < 1.0, "solve_root: q must lie in (0,1)");
  require(lam > 0.0 && std::isfinite(lam), "solve_root: lam must be > 0");
  const ThresholdConstants c = threshold_constants(q, lam);
  if (!(z_abs > c.t_q_lam))
    throw no_root_error("solve_root: |z| must exceed the threshold location");

  const double tol = 1e-13 * (1.0 + z_abs);
  double theta = z_abs;
  for (int it = 0; it < 100; ++it) {
    const double pw = std::pow(theta, q - 1.0);
    const double g = theta + lam * q * pw - z_abs;
    if (std::abs(g) <= tol) break;
    const double dg = 1.0 + lam * q * (q - 1.0) * pw / theta;
    const double step = g / dg;
    theta -= step;
    if (std::abs(step) <= std::numeric_limits<double>::epsilon() * theta) break;
  }
  return theta;
}

/// Soft-thresholding operator sgn(z) (|z| - lam)_+ (the q = 1 case).
inline double soft_threshold(double lam_w, double z) {
  const double a = std::abs(z) - lam_w;
  return a > 0.0 ? (z > 0.0 ? a : -a) : 0.0;
}

/// Hard-thresholding operator (limit q -> 0), exposed for testing only; the
/// estimators in this library restrict q to (0,1]. Ties resolve to 0.
inline double hard_threshold(double lam_w, double z) {
  return std::abs(z) > std::sqrt(2.0 * lam_w) ? z : 0.0;
}

/// Closed form of the q = 1/2 operator. Zero on |z| <= (3/2) lam^{2/3};
/// otherwise a cosine expression of the larger root.
inline double half_threshold_closed(double lam_w, double z) {
  require(lam_w > 0.0 && std::isfinite(lam_w), "half_threshold_closed: lam_w must be > 0");
  const double az = std::abs(z);
  if (az <= 1.5 * std::pow(lam_w, 2.0 / 3.0)) return 0.0;
  const double arg = (lam_w / 4.0) * std::pow(az / 3.0, -1.5);
  const double phi = 2.0 * M_PI / 3.0 - (2.0 / 3.0) * std::acos(arg);
  return (2.0 / 3.0) * z * (1.0 + std::cos(phi));
}

/// Scalar adaptive q-thresholding operator: the proximal map of
/// lam*w*|.|^q applied to z, with ties at the jump resolved to 0. q = 1
/// dispatches to the soft threshold and q = 1/2 to the cosine closed form;
/// all other exponents go through the root solver.
inline double scalar_threshold(const ThresholdParams& p, double z) {
  p.validate();
  const double lw = p.effective();
  if (lw == 0.0) return z;
  if (p.q == 1.0) return soft_threshold(lw, z);
  if (z == 0.0) return 0.0;
  if (p.q == 0.5) return half_threshold_closed(lw, z);
  const ThresholdConstants c = threshold_constants(p.q, lw);
  const double az = std::abs(z);
  if (az <= c.t_q_lam) return 0.0;
  const double root = solve_root(p.q, lw, az);
  return z > 0.0 ? root : -root;
}

/// Coordinate-wise adaptive q-thresholding of a vector; qs[j] and lam_w[j]
/// give the exponent and effective penalty of coordinate j.
inline VectorXd vector_threshold(const VectorXd& z, const VectorXd& qs, const VectorXd& lam_w) {
  require(z.size() == qs.size() && z.size() == lam_w.size(),
          "vector_threshold: dimension mismatch");
  VectorXd out(z.size());
  for (Index j = 0; j < z.size(); ++j) {
    // lam folded into lam_w; weight slot fixed at 1.
    out[j] = scalar_threshold({qs[j], lam_w[j], 1.0}, z[j]);
  }
  return out;
}

/// Grouped overload: one exponent per block, per-coordinate effective
/// penalties taken from lam_w (flat, same length as z).
inline GroupedVector vector_threshold(const GroupedVector& z, const VectorXd& block_q,
                                      const VectorXd& lam_w) {
  const BlockLayout& layout = z.layout();
  require(block_q.size() == layout.blocks(), "vector_threshold: one q per block required");
  require(lam_w.size() == z.size(), "vector_threshold: dimension mismatch");
  VectorXd out(z.size());
  for (Index i = 0; i < layout.blocks(); ++i) {
    for (Index k = 0; k < layout.size(i); ++k) {
      const Index j = layout.offset(i) + k;
      out[j] = scalar_threshold({block_q[i], lam_w[j], 1.0}, z.flat()[j]);
    }
  }
  return GroupedVector(layout, std::move(out));
}

}  // namespace bridgepath
