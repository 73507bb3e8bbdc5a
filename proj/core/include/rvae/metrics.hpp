#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace rvae {

enum class NrmsdNormalizer { Range, StdDev };

std::string_view to_string(NrmsdNormalizer n);
NrmsdNormalizer nrmsd_normalizer_from_string(std::string_view s);

struct EvalMetrics {
  double rmsd = 0.0;   // mmHg
  double nrmsd = 0.0;  // rmsd / (max - min) of the ground truth, or / std
  double r2 = 0.0;     // 1 - SS_res / SS_tot, as a fraction
  std::size_t n = 0;
};

/// Throws ValidationError for empty or mismatched inputs and when the ground
/// truth is constant (R^2 undefined).
EvalMetrics compute_metrics(std::span<const double> y_true, std::span<const double> y_pred,
                            NrmsdNormalizer normalizer = NrmsdNormalizer::Range);

}  // namespace rvae
