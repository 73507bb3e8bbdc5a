#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rvae/cohort.hpp"
#include "rvae/model.hpp"

namespace rvae {

/// Which point of the level set {z : predict_sbp(z, d) = target} a
/// traversal or decomposition decodes.
///   GroupPath:     where the group's training codes sit at that predicted
///                  SBP (centroid + (target - predicted(centroid)) * per_mmhg)
///   GroupCentroid: the point closest to the group's training centroid
///   Origin:        the minimum-norm point
/// The group policies fall back to Origin for models without latent paths.
enum class TraversalAnchor { GroupPath, GroupCentroid, Origin };

std::string_view to_string(TraversalAnchor a);
TraversalAnchor traversal_anchor_from_string(std::string_view s);

/// Latent point z with predict_sbp(z, d) == target, obtained by moving
/// `anchor` along w. Throws NumericError when |w| < 1e-10.
Latent latent_point_for_sbp(const RVaeModel& model, double target_sbp, double dummy, const Latent& anchor = {});

/// Point of the level set at `target_sbp` for the group of `gender`, chosen
/// by `policy`.
Latent group_anchor(const RVaeModel& model, Gender gender, TraversalAnchor policy, double target_sbp);

/// Unit vector perpendicular to w. Throws NumericError when |w| < 1e-10.
Latent perpendicular_direction(const RVaeModel& model);

struct TraversalOptions {
  double sbp_first = 100.0;
  double sbp_last = 170.0;
  double sbp_step = 10.0;
  std::size_t samples = 20;
  double sigma_perp = 1.0;
  bool symmetric = false;  // draw +-t pairs; needs an even sample count
  TraversalAnchor anchor = TraversalAnchor::GroupPath;

  std::vector<double> steps() const;
  void validate() const;
};

struct TraversalCell {
  double sbp = 0.0;
  Gender gender = Gender::Female;
  std::array<double, kBiomarkerCount> mean{};
  std::array<double, kBiomarkerCount> std{};  // sample std (n - 1)
};

struct TraversalReport {
  std::vector<double> steps;
  std::vector<TraversalCell> cells;  // step-major, female before male
  // Least-squares tendency line of the step means against SBP, [group][biomarker];
  // group 0 is female.
  std::array<std::array<double, kBiomarkerCount>, 2> slope{};
  std::array<std::array<double, kBiomarkerCount>, 2> intercept{};
  TraversalOptions options;

  const TraversalCell& cell(std::size_t step, Gender g) const;
  double slope_of(Gender g, Biomarker b) const { return slope[g == Gender::Male][static_cast<std::size_t>(b)]; }
};

/// Decodes biomarkers along the regression line of each group. Every step
/// and group draws from its own stream derived from one value of `rng`.
TraversalReport traverse(const RVaeModel& model, Rng& rng, const TraversalOptions& options = {});

nlohmann::ordered_json to_json(const TraversalReport& report);
/// Columns: sbp_mmhg,group,biomarker,mean,std. One row per step/group/biomarker.
std::string to_csv(const TraversalReport& report);

// --- misprediction ------------------------------------------------------------------

struct MispredictionLists {
  std::vector<std::size_t> predicted_normo;  // cohort indices
  std::vector<std::size_t> predicted_hyper;
};

/// Among the prehypertensive subjects of `indices` (all subjects when empty),
/// those predicted below 120 and above 140 mmHg. Throws ValidationError when
/// no subject is prehypertensive.
MispredictionLists find_mispredicted(const std::function<double(const Subject&)>& predictor, const Cohort& cohort,
                                     std::span<const std::size_t> indices = {});
/// Eval-mode model predictions (z = mu).
MispredictionLists find_mispredicted(const RVaeModel& model, const Cohort& cohort,
                                     std::span<const std::size_t> indices = {});

struct SubjectDecomposition {
  std::size_t index = 0;
  std::string id;
  Gender gender = Gender::Female;
  double true_sbp = 0.0;
  double predicted_sbp = 0.0;
  std::array<double, kBiomarkerCount> pct_diff{};  // 100 (x_pred - x_true) / x_true
  std::array<bool, kBiomarkerCount> flagged{};      // |x_true| < epsilon; pct_diff left at 0
};

struct ListSummary {
  std::vector<SubjectDecomposition> subjects;
  std::array<double, kBiomarkerCount> mean_pct_diff{};  // NaN when no subject contributes
  std::array<std::size_t, kBiomarkerCount> contributing{};
};

struct MispredictionReport {
  ListSummary predicted_normo;
  ListSummary predicted_hyper;
  TraversalAnchor anchor = TraversalAnchor::GroupPath;
};

struct DecompositionOptions {
  TraversalAnchor anchor = TraversalAnchor::GroupPath;
  double epsilon = 1e-6;
};

SubjectDecomposition decompose_subject(const RVaeModel& model, const Subject& subject, std::size_t index,
                                       double predicted_sbp, const DecompositionOptions& options = {});

/// Throws ValidationError when both lists are empty.
MispredictionReport misprediction_decomposition(const RVaeModel& model, const Cohort& cohort,
                                                const MispredictionLists& lists,
                                                const DecompositionOptions& options = {});

nlohmann::ordered_json to_json(const MispredictionReport& report);
/// Columns: list,biomarker,mean_pct_diff,n_subjects,n_flagged.
std::string to_csv(const MispredictionReport& report);

}  // namespace rvae
