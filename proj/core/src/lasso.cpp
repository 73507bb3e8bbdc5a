#include "rvae/lasso.hpp"

#include <cmath>

#include "rvae/error.hpp"

namespace rvae {

double LassoModel::predict(std::span<const double> x) const { return intercept + dot(coefficients, x); }

std::size_t LassoModel::nonzero() const {
  std::size_t n = 0;
  for (double c : coefficients) n += c != 0.0 ? 1 : 0;
  return n;
}

namespace {

struct Centered {
  Matrix x;
  std::vector<double> y;
  std::vector<double> x_mean;
  double y_mean = 0.0;
};

Centered center(const Matrix& x, std::span<const double> y) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  if (y.size() != n) throw ConfigError("lasso: X rows and y length differ");
  if (n < 2) throw ValidationError("lasso: need at least 2 samples");
  Centered c{x, std::vector<double>(y.begin(), y.end()), std::vector<double>(p, 0.0), 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    c.y_mean += y[i];
    for (std::size_t j = 0; j < p; ++j) c.x_mean[j] += x(i, j);
  }
  c.y_mean /= static_cast<double>(n);
  for (double& m : c.x_mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    c.y[i] -= c.y_mean;
    for (std::size_t j = 0; j < p; ++j) c.x(i, j) -= c.x_mean[j];
  }
  return c;
}

double centered_objective(const Centered& c, std::span<const double> residual, std::span<const double> beta,
                          double lambda) {
  double rss = 0.0;
  for (double r : residual) rss += r * r;
  double l1 = 0.0;
  for (double b : beta) l1 += std::abs(b);
  return rss / (2.0 * static_cast<double>(c.x.rows())) + lambda * l1;
}

}  // namespace

LassoModel lasso_fit(const Matrix& x, std::span<const double> y, double lambda, const LassoOptions& options) {
  if (!(lambda >= 0.0)) throw ConfigError("lasso: lambda must be non-negative");
  const Centered c = center(x, y);
  const std::size_t n = c.x.rows();
  const std::size_t p = c.x.cols();
  const auto nd = static_cast<double>(n);

  std::vector<double> col_sq(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) col_sq[j] += c.x(i, j) * c.x(i, j);
  }
  for (double& v : col_sq) v /= nd;

  LassoModel m;
  m.lambda = lambda;
  m.coefficients.assign(p, 0.0);
  std::vector<double> residual = c.y;

  for (m.sweeps = 1; m.sweeps <= options.max_iter; ++m.sweeps) {
    double max_change = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      if (col_sq[j] == 0.0) continue;
      double rho = 0.0;
      for (std::size_t i = 0; i < n; ++i) rho += c.x(i, j) * residual[i];
      rho = rho / nd + col_sq[j] * m.coefficients[j];
      const double updated = soft_threshold(rho, lambda) / col_sq[j];
      const double delta = updated - m.coefficients[j];
      if (delta != 0.0) {
        for (std::size_t i = 0; i < n; ++i) residual[i] -= delta * c.x(i, j);
        m.coefficients[j] = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (options.record_objective) {
      m.objective_trace.push_back(centered_objective(c, residual, m.coefficients, lambda));
    }
    if (max_change < options.tol) {
      m.converged = true;
      break;
    }
  }
  if (!m.converged) m.sweeps = options.max_iter;
  m.intercept = c.y_mean;
  for (std::size_t j = 0; j < p; ++j) m.intercept -= c.x_mean[j] * m.coefficients[j];
  return m;
}

double lasso_objective(const Matrix& x, std::span<const double> y, const LassoModel& model) {
  if (y.size() != x.rows()) throw ConfigError("lasso_objective: X rows and y length differ");
  double rss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double r = y[i] - model.predict(x.row_span(i));
    rss += r * r;
  }
  double l1 = 0.0;
  for (double b : model.coefficients) l1 += std::abs(b);
  return rss / (2.0 * static_cast<double>(x.rows())) + model.lambda * l1;
}

double lasso_lambda_max(const Matrix& x, std::span<const double> y) {
  const Centered c = center(x, y);
  double best = 0.0;
  for (std::size_t j = 0; j < c.x.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < c.x.rows(); ++i) s += c.x(i, j) * c.y[i];
    best = std::max(best, std::abs(s) / static_cast<double>(c.x.rows()));
  }
  return best;
}

}  // namespace rvae
