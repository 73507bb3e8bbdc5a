#include "rvae/analysis.hpp"

#include <cmath>
#include <limits>

#include "rvae/csv.hpp"
#include "rvae/error.hpp"

namespace rvae {

std::string_view to_string(TraversalAnchor a) {
  switch (a) {
    case TraversalAnchor::GroupPath: return "group_path";
    case TraversalAnchor::GroupCentroid: return "group_centroid";
    case TraversalAnchor::Origin: return "origin";
  }
  return "?";
}

TraversalAnchor traversal_anchor_from_string(std::string_view s) {
  if (s == "group_path") return TraversalAnchor::GroupPath;
  if (s == "group_centroid") return TraversalAnchor::GroupCentroid;
  if (s == "origin") return TraversalAnchor::Origin;
  throw ConfigError("unknown traversal anchor '" + std::string(s) +
                    "' (expected group_path, group_centroid or origin)");
}

namespace {

double norm2(const Latent& w) { return w[0] * w[0] + w[1] * w[1]; }

void require_regressor(const RVaeModel& model) {
  if (std::sqrt(norm2(model.regressor().w)) < 1e-10) {
    throw NumericError("degenerate regressor: |w| < 1e-10, the regression line is undefined");
  }
}

std::array<double, kBiomarkerCount> decode_physical(const RVaeModel& model, const Latent& z) {
  const auto x = model.decode(z);
  return model.scaler.invert_array(x).values;
}

}  // namespace

Latent latent_point_for_sbp(const RVaeModel& model, double target_sbp, double dummy, const Latent& anchor) {
  require_regressor(model);
  const Latent& w = model.regressor().w;
  const double step = (target_sbp - model.predict_sbp(anchor, dummy)) / norm2(w);
  return {anchor[0] + step * w[0], anchor[1] + step * w[1]};
}

Latent group_anchor(const RVaeModel& model, Gender gender, TraversalAnchor policy, double target_sbp) {
  const double d = model.hyperparams().dummy.value(gender);
  if (policy == TraversalAnchor::Origin || !model.latent_paths) return latent_point_for_sbp(model, target_sbp, d);
  const GroupLatentPath& p = (*model.latent_paths)[d != 0.0 ? 1 : 0];
  if (policy == TraversalAnchor::GroupCentroid) return latent_point_for_sbp(model, target_sbp, d, p.centroid);
  const double shift = target_sbp - model.predict_sbp(p.centroid, d);
  // The path meets the level set when w . per_mmhg == 1; project to absorb
  // rounding and hand-built paths.
  return latent_point_for_sbp(model, target_sbp, d,
                              {p.centroid[0] + shift * p.per_mmhg[0], p.centroid[1] + shift * p.per_mmhg[1]});
}

Latent perpendicular_direction(const RVaeModel& model) {
  require_regressor(model);
  const Latent& w = model.regressor().w;
  const double n = std::sqrt(norm2(w));
  return {-w[1] / n, w[0] / n};
}

std::vector<double> TraversalOptions::steps() const {
  std::vector<double> s;
  const auto n = static_cast<std::size_t>(std::floor((sbp_last - sbp_first) / sbp_step + 1e-9)) + 1;
  for (std::size_t i = 0; i < n; ++i) s.push_back(sbp_first + static_cast<double>(i) * sbp_step);
  return s;
}

void TraversalOptions::validate() const {
  if (!(sbp_step > 0.0)) throw ConfigError("traversal: sbp_step must be positive");
  if (!(sbp_last >= sbp_first)) throw ConfigError("traversal: sbp_last must not be below sbp_first");
  if (samples < 2) throw ConfigError("traversal: samples must be at least 2");
  if (!(sigma_perp >= 0.0) || !std::isfinite(sigma_perp)) throw ConfigError("traversal: sigma_perp must be >= 0");
  if (symmetric && samples % 2 != 0) throw ConfigError("traversal: symmetric sampling needs an even sample count");
}

const TraversalCell& TraversalReport::cell(std::size_t step, Gender g) const {
  return cells.at(2 * step + (g == Gender::Male ? 1 : 0));
}

TraversalReport traverse(const RVaeModel& model, Rng& rng, const TraversalOptions& options) {
  options.validate();
  require_regressor(model);
  TraversalReport report;
  report.options = options;
  report.steps = options.steps();
  const Latent u = perpendicular_direction(model);
  const std::uint64_t base = rng.next_u64();
  const std::array<Gender, 2> groups = {Gender::Female, Gender::Male};

  for (std::size_t s = 0; s < report.steps.size(); ++s) {
    for (std::size_t g = 0; g < 2; ++g) {
      const Gender gender = groups[g];
      const Latent centre = group_anchor(model, gender, options.anchor, report.steps[s]);
      Rng stream = Rng::derive(base, {s, g});

      std::vector<double> t(options.samples);
      if (options.symmetric) {
        for (std::size_t i = 0; i < options.samples; i += 2) {
          t[i] = options.sigma_perp * stream.normal();
          t[i + 1] = -t[i];
        }
      } else {
        for (auto& ti : t) ti = options.sigma_perp * stream.normal();
      }

      std::vector<std::array<double, kBiomarkerCount>> decoded;
      decoded.reserve(t.size());
      for (double ti : t) decoded.push_back(decode_physical(model, {centre[0] + ti * u[0], centre[1] + ti * u[1]}));

      TraversalCell cell;
      cell.sbp = report.steps[s];
      cell.gender = gender;
      // Welford: identical samples give exactly zero spread.
      for (std::size_t b = 0; b < kBiomarkerCount; ++b) {
        double mean = 0.0, ss = 0.0, k = 0.0;
        for (const auto& x : decoded) {
          k += 1.0;
          const double delta = x[b] - mean;
          mean += delta / k;
          ss += delta * (x[b] - mean);
        }
        cell.mean[b] = mean;
        cell.std[b] = std::sqrt(ss / (k - 1.0));
      }
      report.cells.push_back(cell);
    }
  }

  // Tendency lines over the step means.
  const std::size_t m = report.steps.size();
  double sx = 0.0;
  for (double v : report.steps) sx += v;
  const double xbar = sx / static_cast<double>(m);
  double sxx = 0.0;
  for (double v : report.steps) sxx += (v - xbar) * (v - xbar);
  for (std::size_t g = 0; g < 2; ++g) {
    for (std::size_t b = 0; b < kBiomarkerCount; ++b) {
      double ybar = 0.0;
      for (std::size_t s = 0; s < m; ++s) ybar += report.cells[2 * s + g].mean[b];
      ybar /= static_cast<double>(m);
      double sxy = 0.0;
      for (std::size_t s = 0; s < m; ++s) sxy += (report.steps[s] - xbar) * (report.cells[2 * s + g].mean[b] - ybar);
      const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
      report.slope[g][b] = slope;
      report.intercept[g][b] = ybar - slope * xbar;
    }
  }
  return report;
}

nlohmann::ordered_json to_json(const TraversalReport& report) {
  nlohmann::ordered_json j;
  j["sbp_steps"] = report.steps;
  j["samples_per_step"] = report.options.samples;
  j["sigma_perp"] = report.options.sigma_perp;
  j["symmetric"] = report.options.symmetric;
  j["anchor"] = std::string(to_string(report.options.anchor));
  nlohmann::ordered_json tendency = nlohmann::ordered_json::object();
  for (std::size_t g = 0; g < 2; ++g) {
    nlohmann::ordered_json group = nlohmann::ordered_json::object();
    for (std::size_t b = 0; b < kBiomarkerCount; ++b) {
      group[std::string(kBiomarkerNames[b])] = {{"slope_per_mmhg", report.slope[g][b]},
                                                {"intercept", report.intercept[g][b]}};
    }
    tendency[std::string(to_string(g == 0 ? Gender::Female : Gender::Male))] = group;
  }
  j["tendency"] = tendency;
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const auto& c : report.cells) {
    nlohmann::ordered_json cj;
    cj["sbp_mmhg"] = c.sbp;
    cj["group"] = std::string(to_string(c.gender));
    nlohmann::ordered_json mean = nlohmann::ordered_json::object(), sd = nlohmann::ordered_json::object();
    for (std::size_t b = 0; b < kBiomarkerCount; ++b) {
      mean[std::string(kBiomarkerNames[b])] = c.mean[b];
      sd[std::string(kBiomarkerNames[b])] = c.std[b];
    }
    cj["mean"] = mean;
    cj["std"] = sd;
    cells.push_back(cj);
  }
  j["cells"] = cells;
  return j;
}

std::string to_csv(const TraversalReport& report) {
  std::string s = "sbp_mmhg,group,biomarker,mean,std\n";
  for (const auto& c : report.cells) {
    for (std::size_t b = 0; b < kBiomarkerCount; ++b) {
      s += csv::format_double(c.sbp) + ',' + std::string(to_string(c.gender)) + ',' + std::string(kBiomarkerNames[b]) +
           ',' + csv::format_double(c.mean[b]) + ',' + csv::format_double(c.std[b]) + '\n';
    }
  }
  return s;
}

// --- misprediction ------------------------------------------------------------------

MispredictionLists find_mispredicted(const std::function<double(const Subject&)>& predictor, const Cohort& cohort,
                                     std::span<const std::size_t> indices) {
  std::vector<std::size_t> all;
  if (indices.empty()) {
    all.resize(cohort.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    indices = all;
  }
  MispredictionLists lists;
  std::size_t n_pre = 0;
  for (std::size_t i : indices) {
    const Subject& s = cohort.at(i);
    if (s.category() != SbpCategory::Prehypertension) continue;
    ++n_pre;
    const double p = predictor(s);
    if (categorize(p) == SbpCategory::Normotension) lists.predicted_normo.push_back(i);
    else if (categorize(p) == SbpCategory::Hypertension) lists.predicted_hyper.push_back(i);
  }
  if (n_pre == 0) throw ValidationError("find_mispredicted: no prehypertensive subjects in the cohort");
  return lists;
}

namespace {

double model_prediction(const RVaeModel& model, const Subject& s) {
  const auto x = model.scaler.apply(s.biomarkers);
  const LatentCode code = model.encode(x.values, Mode::Eval);
  return model.predict_sbp(code.mu, model.hyperparams().dummy.value(s.gender));
}

ListSummary summarize(const RVaeModel& model, const Cohort& cohort, const std::vector<std::size_t>& idx,
                      const DecompositionOptions& options) {
  ListSummary out;
  std::array<double, kBiomarkerCount> sum{};
  for (std::size_t i : idx) {
    const Subject& s = cohort.at(i);
    out.subjects.push_back(decompose_subject(model, s, i, model_prediction(model, s), options));
    const auto& d = out.subjects.back();
    for (std::size_t b = 0; b < kBiomarkerCount; ++b) {
      if (d.flagged[b]) continue;
      sum[b] += d.pct_diff[b];
      ++out.contributing[b];
    }
  }
  for (std::size_t b = 0; b < kBiomarkerCount; ++b) {
    out.mean_pct_diff[b] = out.contributing[b] > 0 ? sum[b] / static_cast<double>(out.contributing[b])
                                                   : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace

MispredictionLists find_mispredicted(const RVaeModel& model, const Cohort& cohort,
                                     std::span<const std::size_t> indices) {
  return find_mispredicted([&](const Subject& s) { return model_prediction(model, s); }, cohort, indices);
}

SubjectDecomposition decompose_subject(const RVaeModel& model, const Subject& subject, std::size_t index,
                                       double predicted_sbp, const DecompositionOptions& options) {
  SubjectDecomposition d;
  d.index = index;
  d.id = subject.id;
  d.gender = subject.gender;
  d.true_sbp = subject.sbp_mmhg;
  d.predicted_sbp = predicted_sbp;
  auto at = [&](double sbp) { return group_anchor(model, subject.gender, options.anchor, sbp); };
  const auto x_true = decode_physical(model, at(subject.sbp_mmhg));
  const auto x_pred = decode_physical(model, at(predicted_sbp));
  for (std::size_t b = 0; b < kBiomarkerCount; ++b) {
    if (std::abs(x_true[b]) < options.epsilon) {
      d.flagged[b] = true;
      continue;
    }
    d.pct_diff[b] = 100.0 * (x_pred[b] - x_true[b]) / x_true[b];
  }
  return d;
}

MispredictionReport misprediction_decomposition(const RVaeModel& model, const Cohort& cohort,
                                                const MispredictionLists& lists,
                                                const DecompositionOptions& options) {
  if (lists.predicted_normo.empty() && lists.predicted_hyper.empty()) {
    throw ValidationError("misprediction_decomposition: both misprediction lists are empty");
  }
  MispredictionReport r;
  r.anchor = options.anchor;
  r.predicted_normo = summarize(model, cohort, lists.predicted_normo, options);
  r.predicted_hyper = summarize(model, cohort, lists.predicted_hyper, options);
  return r;
}

namespace {

nlohmann::ordered_json list_json(const ListSummary& l) {
  nlohmann::ordered_json j;
  j["n_subjects"] = l.subjects.size();
  nlohmann::ordered_json mean = nlohmann::ordered_json::object();
  for (std::size_t b = 0; b < kBiomarkerCount; ++b) {
    // NaN has no JSON form; empty lists report null
    if (std::isnan(l.mean_pct_diff[b])) mean[std::string(kBiomarkerNames[b])] = nullptr;
    else mean[std::string(kBiomarkerNames[b])] = l.mean_pct_diff[b];
  }
  j["mean_pct_diff"] = mean;
  nlohmann::ordered_json subjects = nlohmann::ordered_json::array();
  for (const auto& s : l.subjects) {
    nlohmann::ordered_json sj;
    sj["id"] = s.id;
    sj["group"] = std::string(to_string(s.gender));
    sj["true_sbp"] = s.true_sbp;
    sj["predicted_sbp"] = s.predicted_sbp;
    nlohmann::ordered_json pct = nlohmann::ordered_json::object();
    for (std::size_t b = 0; b < kBiomarkerCount; ++b) {
      if (s.flagged[b]) pct[std::string(kBiomarkerNames[b])] = nullptr;
      else pct[std::string(kBiomarkerNames[b])] = s.pct_diff[b];
    }
    sj["pct_diff"] = pct;
    subjects.push_back(sj);
  }
  j["subjects"] = subjects;
  return j;
}

void list_csv(std::string& s, std::string_view name, const ListSummary& l) {
  for (std::size_t b = 0; b < kBiomarkerCount; ++b) {
    const std::size_t flagged = l.subjects.size() - l.contributing[b];
    s += std::string(name) + ',' + std::string(kBiomarkerNames[b]) + ',' +
         (std::isnan(l.mean_pct_diff[b]) ? std::string() : csv::format_double(l.mean_pct_diff[b])) + ',' +
         std::to_string(l.subjects.size()) + ',' + std::to_string(flagged) + '\n';
  }
}

}  // namespace

nlohmann::ordered_json to_json(const MispredictionReport& report) {
  nlohmann::ordered_json j;
  j["anchor"] = std::string(to_string(report.anchor));
  j["predicted_normotensive"] = list_json(report.predicted_normo);
  j["predicted_hypertensive"] = list_json(report.predicted_hyper);
  return j;
}

std::string to_csv(const MispredictionReport& report) {
  std::string s = "list,biomarker,mean_pct_diff,n_subjects,n_flagged\n";
  list_csv(s, "predicted_normotensive", report.predicted_normo);
  list_csv(s, "predicted_hypertensive", report.predicted_hyper);
  return s;
}

}  // namespace rvae
