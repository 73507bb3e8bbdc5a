#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rvae/biomarkers.hpp"

namespace rvae {

enum class SbpCategory { Normotension, Prehypertension, Hypertension };

std::string_view to_string(SbpCategory c);

/// < 120 normotension, > 140 hypertension, [120, 140] prehypertension.
SbpCategory categorize(double sbp_mmhg);

inline constexpr double kSbpMin = 60.0;   // exclusive
inline constexpr double kSbpMax = 260.0;  // exclusive

struct Subject {
  std::string id;
  Gender gender = Gender::Female;
  double sbp_mmhg = 0.0;
  BiomarkerVector biomarkers;

  SbpCategory category() const { return categorize(sbp_mmhg); }
  bool operator==(const Subject&) const = default;
};

using Cohort = std::vector<Subject>;

// --- CSV ----------------------------------------------------------------------

struct IngestIssue {
  std::size_t line = 0;  // 1-based; 1 is the header
  std::string reason;
};

struct CohortLoadResult {
  Cohort subjects;
  std::vector<IngestIssue> issues;
  bool fatal = false;  // header unusable; no rows were read
};

/// Header-keyed: `id,gender,sbp_mmhg` plus the 13 biomarker columns in any
/// order. Bad rows are skipped and itemized; good rows are kept.
CohortLoadResult load_cohort(const std::filesystem::path& path);
CohortLoadResult parse_cohort(std::string_view text);

/// Fixed column order, shortest round-trip decimal formatting.
std::string format_cohort(const Cohort& cohort);
void save_cohort(const std::filesystem::path& path, const Cohort& cohort);

// --- synthetic generator ------------------------------------------------------------

struct BiomarkerTrend {
  std::array<double, 2> baseline{};  // value at SBP 120 mmHg, [female, male]
  std::array<double, 2> slope{};     // per mmHg, [female, male]
  double noise_sd = 1.0;
};

struct CohortSpec {
  std::size_t n_subjects = 3600;
  double male_fraction = 0.5;
  std::uint64_t seed = 42;
  // Category shares at the reference cohort size: 1321 / 582 / 1697 of 3600.
  std::array<double, 3> category_share = {1321.0 / 3600.0, 582.0 / 3600.0, 1697.0 / 3600.0};
  std::array<double, 2> normotension_range = {95.0, 120.0};
  std::array<double, 2> prehypertension_range = {120.0, 140.0};
  std::array<double, 2> hypertension_range = {140.0, 185.0};
  std::array<BiomarkerTrend, kBiomarkerCount> trends = default_trends();
  double noise_scale = 1.0;  // multiplies every noise_sd; 0 gives a noiseless cohort
  // Extra prehypertension subjects whose biomarkers follow the trend at
  // outlier_profile_sbp while their label is outlier_label_sbp.
  std::size_t n_outliers = 0;
  double outlier_profile_sbp = 150.0;
  double outlier_label_sbp = 130.0;

  static std::array<BiomarkerTrend, kBiomarkerCount> default_trends();
  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

inline constexpr double kTrendReferenceSbp = 120.0;

struct GroundTruth {
  CohortSpec spec;
  std::array<std::size_t, 3> category_counts{};
  std::vector<std::string> outlier_ids;
};

struct SyntheticCohort {
  Cohort subjects;
  GroundTruth truth;
};

SyntheticCohort generate_synthetic(const CohortSpec& spec);

/// Noise-free biomarker profile of the generator at a given SBP.
BiomarkerVector trend_profile(const CohortSpec& spec, Gender g, double sbp_mmhg);

std::string ground_truth_json(const GroundTruth& truth);

/// Parses a `key = value` cohort spec file; unknown keys are rejected.
/// Per-biomarker keys look like `trend.iLVEDV.slope_male = -0.16`. Keys
/// are applied on top of `base`.
CohortSpec parse_cohort_spec(std::string_view text, CohortSpec base = {});
CohortSpec load_cohort_spec(const std::filesystem::path& path, CohortSpec base = {});

}  // namespace rvae
