#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace rvae {

struct GradCheckOptions {
  double step = 1e-5;        // central-difference half width
  double tolerance = 1e-4;   // max relative error
  // Relative errors are taken against max(|analytic|, |numeric|, abs_floor)
  // so that components that are zero up to roundoff do not produce spurious
  // failures.
  double abs_floor = 1e-7;
};

struct GradCheckEntry {
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_relative_error = 0.0;
  bool deterministic = true;  // false: the loss changed between identical calls
  bool passed = false;
};

double relative_error(double analytic, double numeric, double abs_floor);

/// Compares `analytic` against central differences of `loss` at `params` for
/// the listed parameter indices (all parameters when `indices` is empty).
/// The loss must be a pure function of the parameters, i.e. any sampling
/// noise has to be frozen by the caller; a loss that returns different values
/// for identical inputs invalidates the check.
GradCheckReport grad_check(const std::function<double(std::span<const double>)>& loss,
                           std::span<const double> params, std::span<const double> analytic,
                           std::span<const std::size_t> indices = {},
                           const GradCheckOptions& options = {});

}  // namespace rvae
