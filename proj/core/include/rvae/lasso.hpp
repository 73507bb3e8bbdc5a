#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rvae/matrix.hpp"

namespace rvae {

struct LassoOptions {
  double tol = 1e-8;          // max absolute coefficient change per sweep
  std::size_t max_iter = 10000;
  bool record_objective = false;
};

struct LassoModel {
  std::vector<double> coefficients;
  double intercept = 0.0;
  double lambda = 0.0;
  bool converged = false;  // false: max_iter reached first
  std::size_t sweeps = 0;
  std::vector<double> objective_trace;  // after each sweep, when recorded

  double predict(std::span<const double> x) const;
  std::size_t nonzero() const;
};

inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

/// Cyclic coordinate descent with soft-thresholding for
///   (1/2n) ||y - b0 - X beta||^2 + lambda ||beta||_1
/// with an unpenalized intercept.
LassoModel lasso_fit(const Matrix& x, std::span<const double> y, double lambda, const LassoOptions& options = {});

double lasso_objective(const Matrix& x, std::span<const double> y, const LassoModel& model);

/// Smallest lambda for which every coefficient is zero: max_j |x_j^T y_c| / n
/// over centered columns.
double lasso_lambda_max(const Matrix& x, std::span<const double> y);

}  // namespace rvae
