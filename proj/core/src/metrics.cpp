#include "rvae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rvae/error.hpp"

namespace rvae {

std::string_view to_string(NrmsdNormalizer n) { return n == NrmsdNormalizer::Range ? "range" : "std"; }

NrmsdNormalizer nrmsd_normalizer_from_string(std::string_view s) {
  if (s == "range") return NrmsdNormalizer::Range;
  if (s == "std") return NrmsdNormalizer::StdDev;
  throw ConfigError("unknown nRMSD normalizer '" + std::string(s) + "'");
}

EvalMetrics compute_metrics(std::span<const double> y_true, std::span<const double> y_pred,
                            NrmsdNormalizer normalizer) {
  if (y_true.size() != y_pred.size()) throw ValidationError("metrics: length mismatch");
  if (y_true.empty()) throw ValidationError("metrics: empty evaluation set");
  const auto n = static_cast<double>(y_true.size());
  double mean = 0.0;
  for (double y : y_true) mean += y;
  mean /= n;
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
    ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
  }
  if (!(ss_tot > 0.0)) throw ValidationError("metrics: ground truth is constant, R^2 undefined");
  EvalMetrics m;
  m.n = y_true.size();
  m.rmsd = std::sqrt(ss_res / n);
  const auto [lo, hi] = std::minmax_element(y_true.begin(), y_true.end());
  const double scale = normalizer == NrmsdNormalizer::Range ? *hi - *lo : std::sqrt(ss_tot / n);
  m.nrmsd = m.rmsd / scale;
  m.r2 = 1.0 - ss_res / ss_tot;
  return m;
}

}  // namespace rvae
