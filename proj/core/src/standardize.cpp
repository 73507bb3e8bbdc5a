#include "rvae/standardize.hpp"

#include <cmath>
#include <string>

#include "rvae/error.hpp"

namespace rvae {

FeatureScaler FeatureScaler::fit(std::span<const BiomarkerVector> rows) {
  if (rows.empty()) throw ValidationError("standardize: fit set is empty");
  FeatureScaler s;
  const auto n = static_cast<double>(rows.size());
  for (std::size_t f = 0; f < kBiomarkerCount; ++f) {
    double sum = 0.0;
    for (const auto& r : rows) sum += r[f];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& r : rows) ss += (r[f] - mean) * (r[f] - mean);
    const double sd = std::sqrt(ss / n);
    if (!(sd > 0.0)) {
      throw ValidationError("standardize: feature '" + std::string(kBiomarkerNames[f]) +
                            "' has zero variance");
    }
    s.mean[f] = mean;
    s.std[f] = sd;
  }
  return s;
}

BiomarkerVector FeatureScaler::apply(const BiomarkerVector& x) const {
  BiomarkerVector z;
  for (std::size_t f = 0; f < kBiomarkerCount; ++f) z[f] = (x[f] - mean[f]) / std[f];
  return z;
}

BiomarkerVector FeatureScaler::invert(const BiomarkerVector& z) const {
  BiomarkerVector x;
  for (std::size_t f = 0; f < kBiomarkerCount; ++f) x[f] = z[f] * std[f] + mean[f];
  return x;
}

std::array<double, kBiomarkerCount> FeatureScaler::apply_array(std::span<const double> x) const {
  if (x.size() != kBiomarkerCount) throw ConfigError("standardize: expected 13 features");
  std::array<double, kBiomarkerCount> z{};
  for (std::size_t f = 0; f < kBiomarkerCount; ++f) z[f] = (x[f] - mean[f]) / std[f];
  return z;
}

BiomarkerVector FeatureScaler::invert_array(std::span<const double> z) const {
  if (z.size() != kBiomarkerCount) throw ConfigError("standardize: expected 13 features");
  BiomarkerVector x;
  for (std::size_t f = 0; f < kBiomarkerCount; ++f) x[f] = z[f] * std[f] + mean[f];
  return x;
}

FeatureScaler FeatureScaler::identity() {
  FeatureScaler s;
  s.std.fill(1.0);
  return s;
}

bool FeatureScaler::is_identity() const { return *this == identity(); }

}  // namespace rvae
