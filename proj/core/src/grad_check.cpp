#include "rvae/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "rvae/error.hpp"

namespace rvae {

double relative_error(double analytic, double numeric, double abs_floor) {
  const double diff = std::abs(analytic - numeric);
  if (diff == 0.0) return 0.0;
  return diff / std::max({std::abs(analytic), std::abs(numeric), abs_floor});
}

GradCheckReport grad_check(const std::function<double(std::span<const double>)>& loss,
                           std::span<const double> params, std::span<const double> analytic,
                           std::span<const std::size_t> indices, const GradCheckOptions& options) {
  if (analytic.size() != params.size()) {
    throw ConfigError("grad_check: analytic gradient length differs from parameter count");
  }
  std::vector<double> probe(params.begin(), params.end());
  GradCheckReport report;

  const double base1 = loss(probe);
  const double base2 = loss(probe);
  if (base1 != base2 || !std::isfinite(base1)) {
    report.deterministic = false;
    report.passed = false;
    return report;
  }

  std::vector<std::size_t> all;
  if (indices.empty()) {
    all.resize(params.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    indices = all;
  }

  for (std::size_t idx : indices) {
    if (idx >= params.size()) throw ConfigError("grad_check: probe index out of range");
    const double original = probe[idx];
    probe[idx] = original + options.step;
    const double up = loss(probe);
    probe[idx] = original - options.step;
    const double down = loss(probe);
    probe[idx] = original;
    GradCheckEntry e;
    e.index = idx;
    e.analytic = analytic[idx];
    e.numeric = (up - down) / (2.0 * options.step);
    e.relative_error = relative_error(e.analytic, e.numeric, options.abs_floor);
    report.max_relative_error = std::max(report.max_relative_error, e.relative_error);
    report.entries.push_back(e);
  }
  report.passed = report.max_relative_error < options.tolerance;
  return report;
}

}  // namespace rvae
