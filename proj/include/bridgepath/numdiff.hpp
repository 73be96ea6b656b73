#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>

namespace bridgepath {

/// Central finite-difference gradient of a scalar function, with coordinate
/// steps h_j = rel_step * (1 + |x_j|).
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double rel_step = 1e-6) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = rel_step * (1.0 + std::abs(x[j]));
    xp[j] = x[j] + h;
    const double fp = f(xp);
    xp[j] = x[j] - h;
    const double fm = f(xp);
    xp[j] = x[j];
    g[j] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Central finite-difference Jacobian of a gradient map; for gradients of a
/// C^2 function the result approximates the Hessian (unsymmetrized).
inline Eigen::MatrixXd fd_hessian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
    const Eigen::VectorXd& x, double rel_step = 1e-5) {
  const Eigen::Index p = x.size();
  Eigen::MatrixXd h(p, p);
  Eigen::VectorXd xp = x;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double step = rel_step * (1.0 + std::abs(x[j]));
    xp[j] = x[j] + step;
    const Eigen::VectorXd gp = grad(xp);
    xp[j] = x[j] - step;
    const Eigen::VectorXd gm = grad(xp);
    xp[j] = x[j];
    h.col(j) = (gp - gm) / (2.0 * step);
  }
  return h;
}

}  // namespace bridgepath
