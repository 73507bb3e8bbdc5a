#pragma once

#include <array>
#include <span>
#include <vector>

#include "rvae/biomarkers.hpp"
#include "rvae/matrix.hpp"

namespace rvae {

/// Per-feature z-scoring statistics. Fit on the training split only.
struct FeatureScaler {
  std::array<double, kBiomarkerCount> mean{};
  std::array<double, kBiomarkerCount> std{};  // population standard deviation

  /// Throws ValidationError naming the feature when its variance is zero,
  /// and when `rows` is empty.
  static FeatureScaler fit(std::span<const BiomarkerVector> rows);

  BiomarkerVector apply(const BiomarkerVector& x) const;
  BiomarkerVector invert(const BiomarkerVector& z) const;
  std::array<double, kBiomarkerCount> apply_array(std::span<const double> x) const;
  BiomarkerVector invert_array(std::span<const double> z) const;

  bool is_identity() const;
  static FeatureScaler identity();
  bool operator==(const FeatureScaler&) const = default;
};

}  // namespace rvae
