#pragma once

#include <stdexcept>
#include <string>

namespace bridgepath {

/// Thrown by the scalar root solver when the input magnitude does not exceed
/// the jump threshold, so the stationarity equation has no admissible root.
struct no_root_error : std::domain_error {
  using std::domain_error::domain_error;
};

/// Thrown when an objective or gradient evaluates to NaN/Inf during a solve.
struct non_finite_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when a matrix required to be positive definite fails to factorize.
struct singular_matrix_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace bridgepath
