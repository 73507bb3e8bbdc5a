#include "rvae/cohort.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rvae/csv.hpp"
#include "rvae/error.hpp"
#include "rvae/keyvalue.hpp"
#include "rvae/rng.hpp"

namespace rvae {

std::string_view to_string(SbpCategory c) {
  switch (c) {
    case SbpCategory::Normotension: return "normotension";
    case SbpCategory::Prehypertension: return "prehypertension";
    case SbpCategory::Hypertension: return "hypertension";
  }
  return "unknown";
}

SbpCategory categorize(double sbp) {
  if (sbp < 120.0) return SbpCategory::Normotension;
  if (sbp > 140.0) return SbpCategory::Hypertension;
  return SbpCategory::Prehypertension;
}

// --- CSV ----------------------------------------------------------------------

CohortLoadResult parse_cohort(std::string_view text) {
  CohortLoadResult result;
  csv::Table t = csv::parse(text);

  std::vector<std::string> required = {"id", "gender", "sbp_mmhg"};
  for (auto name : kBiomarkerNames) required.emplace_back(name);
  std::vector<std::size_t> col(required.size());
  for (std::size_t i = 0; i < required.size(); ++i) {
    auto c = t.column(required[i]);
    if (!c) {
      result.issues.push_back({1, "missing column '" + required[i] + "'"});
      result.fatal = true;
    } else {
      col[i] = *c;
    }
  }
  if (result.fatal) return result;

  std::set<std::string> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::size_t line = t.line_numbers[r];
    auto field = [&](std::size_t i) -> std::string_view {
      return col[i] < row.size() ? std::string_view(row[col[i]]) : std::string_view{};
    };
    std::string problem;
    Subject s;
    s.id = std::string(field(0));
    if (s.id.empty()) problem = "empty id";
    if (problem.empty()) {
      try {
        s.gender = gender_from_string(field(1));
      } catch (const ValidationError& e) {
        problem = e.what();
      }
    }
    if (problem.empty()) {
      auto sbp = csv::parse_double(field(2));
      if (!sbp) {
        problem = "sbp_mmhg '" + std::string(field(2)) + "' is not a number";
      } else if (!(*sbp > kSbpMin && *sbp < kSbpMax)) {
        problem = "sbp_mmhg " + std::string(field(2)) + " outside (60, 260)";
      } else {
        s.sbp_mmhg = *sbp;
      }
    }
    for (std::size_t b = 0; problem.empty() && b < kBiomarkerCount; ++b) {
      auto v = csv::parse_double(field(3 + b));
      if (!v) {
        problem = std::string(kBiomarkerNames[b]) + " '" + std::string(field(3 + b)) + "' is not a number";
      } else {
        s.biomarkers[b] = *v;
      }
    }
    if (problem.empty() && !seen.insert(s.id).second) problem = "duplicate id '" + s.id + "'";
    if (problem.empty()) {
      result.subjects.push_back(std::move(s));
    } else {
      result.issues.push_back({line, problem});
    }
  }
  return result;
}

CohortLoadResult load_cohort(const std::filesystem::path& path) {
  std::ifstream probe(path);
  if (!probe) throw ValidationError("cannot open cohort '" + path.string() + "'");
  std::ostringstream ss;
  ss << probe.rdbuf();
  return parse_cohort(ss.str());
}

std::string format_cohort(const Cohort& cohort) {
  std::ostringstream out;
  out << "id,gender,sbp_mmhg";
  for (auto name : kBiomarkerNames) out << ',' << name;
  out << '\n';
  for (const auto& s : cohort) {
    out << s.id << ',' << to_string(s.gender) << ',' << csv::format_double(s.sbp_mmhg);
    for (double v : s.biomarkers.values) out << ',' << csv::format_double(v);
    out << '\n';
  }
  return out.str();
}

void save_cohort(const std::filesystem::path& path, const Cohort& cohort) {
  csv::write_text(path, format_cohort(cohort));
}

// --- synthetic generator ------------------------------------------------------------

std::array<BiomarkerTrend, kBiomarkerCount> CohortSpec::default_trends() {
  std::array<BiomarkerTrend, kBiomarkerCount> t{};
  auto set = [&](Biomarker b, double base_f, double base_m, double slope_f, double slope_m, double sd) {
    t[static_cast<std::size_t>(b)] = BiomarkerTrend{{base_f, base_m}, {slope_f, slope_m}, sd};
  };
  // Trended: LV volume falls, ejection and late filling rise, early filling
  // falls. Male iLVEDV and LVPER slopes are steeper than female ones.
  set(Biomarker::iLVEDV, 72.0, 82.0, -0.08, -0.16, 3.0);
  set(Biomarker::LVPER, 380.0, 450.0, 0.5, 1.0, 20.0);
  set(Biomarker::LVPFR, 440.0, 470.0, -1.1, -1.1, 25.0);
  set(Biomarker::LVPAFR, 280.0, 300.0, 0.75, 0.8, 15.0);
  set(Biomarker::LVAC, 32.0, 30.0, 0.085, 0.08, 2.0);
  // Untrended.
  set(Biomarker::iLVSV, 45.0, 50.0, 0.0, 0.0, 4.0);
  set(Biomarker::LVEF, 62.0, 60.0, 0.0, 0.0, 4.0);
  set(Biomarker::LVEDM, 85.0, 120.0, 0.0, 0.0, 10.0);
  set(Biomarker::iRVEDV, 75.0, 88.0, 0.0, 0.0, 6.0);
  set(Biomarker::RVPER, 320.0, 380.0, 0.0, 0.0, 35.0);
  set(Biomarker::RVPFR, 330.0, 380.0, 0.0, 0.0, 40.0);
  set(Biomarker::RVPAFR, 250.0, 270.0, 0.0, 0.0, 30.0);
  set(Biomarker::RVAC, 30.0, 30.0, 0.0, 0.0, 4.0);
  return t;
}

void CohortSpec::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("cohort spec field '" + field + "': " + why);
  };
  if (n_subjects < 50) fail("n_subjects", "must be at least 50");
  if (!(male_fraction >= 0.0 && male_fraction <= 1.0)) fail("male_fraction", "must lie in [0, 1]");
  double share_sum = 0.0;
  for (double s : category_share) {
    if (!(s >= 0.0)) fail("category_share", "shares must be non-negative");
    share_sum += s;
  }
  if (!(std::abs(share_sum - 1.0) < 1e-9)) fail("category_share", "shares must sum to 1");
  auto check_range = [&](const std::array<double, 2>& r, const std::string& name, double lo, double hi) {
    if (!(r[0] < r[1])) fail(name, "lower bound must be below upper bound");
    if (r[0] < lo || r[1] > hi) fail(name, "range leaves its SBP category");
  };
  check_range(normotension_range, "normotension_range", kSbpMin, 120.0);
  check_range(prehypertension_range, "prehypertension_range", 120.0, 140.0);
  check_range(hypertension_range, "hypertension_range", 140.0, kSbpMax);
  if (!(noise_scale >= 0.0)) fail("noise_scale", "must be non-negative");
  for (std::size_t b = 0; b < kBiomarkerCount; ++b) {
    if (!(trends[b].noise_sd > 0.0)) {
      fail("trend." + std::string(kBiomarkerNames[b]) + ".noise_sd", "must be positive");
    }
  }
  if (n_outliers > 0) {
    if (!(outlier_label_sbp >= 120.0 && outlier_label_sbp <= 140.0)) {
      fail("outlier_label_sbp", "must be a prehypertension value");
    }
    if (!(outlier_profile_sbp > kSbpMin && outlier_profile_sbp < kSbpMax)) {
      fail("outlier_profile_sbp", "outside (60, 260)");
    }
  }
}

BiomarkerVector trend_profile(const CohortSpec& spec, Gender g, double sbp) {
  const std::size_t gi = g == Gender::Male ? 1 : 0;
  BiomarkerVector v;
  for (std::size_t b = 0; b < kBiomarkerCount; ++b) {
    v[b] = spec.trends[b].baseline[gi] + spec.trends[b].slope[gi] * (sbp - kTrendReferenceSbp);
  }
  return v;
}

namespace {

std::array<std::size_t, 3> allocate_counts(std::size_t n, const std::array<double, 3>& share) {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> rem{};
  std::size_t used = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = share[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    rem[i] = exact - static_cast<double>(counts[i]);
    used += counts[i];
  }
  while (used < n) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < 3; ++i) {
      if (rem[i] > rem[best]) best = i;
    }
    ++counts[best];
    rem[best] = -1.0;
    ++used;
  }
  return counts;
}

std::string make_id(char prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%c%05zu", prefix, i);
  return buf;
}

}  // namespace

SyntheticCohort generate_synthetic(const CohortSpec& spec) {
  spec.validate();
  SyntheticCohort out;
  out.truth.spec = spec;
  out.truth.category_counts = allocate_counts(spec.n_subjects, spec.category_share);

  Rng rng(spec.seed);
  std::vector<int> categories;
  categories.reserve(spec.n_subjects);
  for (int c = 0; c < 3; ++c) categories.insert(categories.end(), out.truth.category_counts[c], c);
  rng.shuffle(categories);

  const std::array<const std::array<double, 2>*, 3> ranges = {
      &spec.normotension_range, &spec.prehypertension_range, &spec.hypertension_range};

  auto draw_biomarkers = [&](Gender g, double profile_sbp) {
    BiomarkerVector v = trend_profile(spec, g, profile_sbp);
    for (std::size_t b = 0; b < kBiomarkerCount; ++b) {
      v[b] += spec.noise_scale * spec.trends[b].noise_sd * rng.normal();
    }
    return v;
  };

  out.subjects.reserve(spec.n_subjects + spec.n_outliers);
  for (std::size_t i = 0; i < spec.n_subjects; ++i) {
    Subject s;
    s.id = make_id('S', i + 1);
    s.gender = rng.uniform() < spec.male_fraction ? Gender::Male : Gender::Female;
    const auto& r = *ranges[static_cast<std::size_t>(categories[i])];
    s.sbp_mmhg = rng.uniform(r[0], r[1]);
    s.biomarkers = draw_biomarkers(s.gender, s.sbp_mmhg);
    out.subjects.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < spec.n_outliers; ++i) {
    Subject s;
    s.id = make_id('X', i + 1);
    s.gender = rng.uniform() < spec.male_fraction ? Gender::Male : Gender::Female;
    s.sbp_mmhg = spec.outlier_label_sbp;
    s.biomarkers = draw_biomarkers(s.gender, spec.outlier_profile_sbp);
    out.truth.outlier_ids.push_back(s.id);
    out.subjects.push_back(std::move(s));
  }
  return out;
}

std::string ground_truth_json(const GroundTruth& truth) {
  const CohortSpec& s = truth.spec;
  nlohmann::ordered_json j;
  j["format"] = "rvae-cohort-truth";
  j["schema_version"] = 1;
  j["seed"] = s.seed;
  j["n_subjects"] = s.n_subjects;
  j["n_outliers"] = s.n_outliers;
  j["male_fraction"] = s.male_fraction;
  j["noise_scale"] = s.noise_scale;
  j["reference_sbp_mmhg"] = kTrendReferenceSbp;
  j["category_counts"] = {{"normotension", truth.category_counts[0]},
                          {"prehypertension", truth.category_counts[1]},
                          {"hypertension", truth.category_counts[2]}};
  j["sbp_ranges"] = {{"normotension", s.normotension_range},
                     {"prehypertension", s.prehypertension_range},
                     {"hypertension", s.hypertension_range}};
  nlohmann::ordered_json trends = nlohmann::ordered_json::object();
  for (std::size_t b = 0; b < kBiomarkerCount; ++b) {
    const auto& t = s.trends[b];
    trends[std::string(kBiomarkerNames[b])] = {
        {"baseline_female", t.baseline[0]}, {"baseline_male", t.baseline[1]},
        {"slope_female", t.slope[0]},       {"slope_male", t.slope[1]},
        {"noise_sd", t.noise_sd}};
  }
  j["trends"] = trends;
  j["outliers"] = {{"profile_sbp_mmhg", s.outlier_profile_sbp},
                   {"label_sbp_mmhg", s.outlier_label_sbp},
                   {"ids", truth.outlier_ids}};
  return j.dump(2) + "\n";
}

CohortSpec parse_cohort_spec(std::string_view text, CohortSpec spec) {
  const KeyValueFile kv = KeyValueFile::parse(text);
  auto range = [&](const std::string& key, std::array<double, 2>& dst) {
    auto v = kv.get_double_list(key);
    if (v.size() != 2) throw ConfigError("cohort spec field '" + key + "': expected 'lo, hi'");
    dst = {v[0], v[1]};
  };
  for (const auto& [key, value] : kv.entries()) {
    if (key == "n_subjects") spec.n_subjects = kv.get_uint(key);
    else if (key == "male_fraction") spec.male_fraction = kv.get_double(key);
    else if (key == "seed") spec.seed = kv.get_uint(key);
    else if (key == "noise_scale") spec.noise_scale = kv.get_double(key);
    else if (key == "n_outliers") spec.n_outliers = kv.get_uint(key);
    else if (key == "outlier_profile_sbp") spec.outlier_profile_sbp = kv.get_double(key);
    else if (key == "outlier_label_sbp") spec.outlier_label_sbp = kv.get_double(key);
    else if (key == "normotension_range") range(key, spec.normotension_range);
    else if (key == "prehypertension_range") range(key, spec.prehypertension_range);
    else if (key == "hypertension_range") range(key, spec.hypertension_range);
    else if (key == "category_share") {
      auto v = kv.get_double_list(key);
      if (v.size() != 3) throw ConfigError("cohort spec field 'category_share': expected three shares");
      const double total = v[0] + v[1] + v[2];
      if (!(total > 0.0)) throw ConfigError("cohort spec field 'category_share': shares sum to zero");
      spec.category_share = {v[0] / total, v[1] / total, v[2] / total};
    } else if (key.starts_with("trend.")) {
      const auto dot = key.find('.', 6);
      if (dot == std::string::npos) throw ConfigError("cohort spec field '" + key + "': malformed");
      auto b = biomarker_from_name(std::string_view(key).substr(6, dot - 6));
      if (!b) throw ConfigError("cohort spec field '" + key + "': unknown biomarker");
      auto& t = spec.trends[static_cast<std::size_t>(*b)];
      const std::string attr = key.substr(dot + 1);
      if (attr == "baseline_female") t.baseline[0] = kv.get_double(key);
      else if (attr == "baseline_male") t.baseline[1] = kv.get_double(key);
      else if (attr == "slope_female") t.slope[0] = kv.get_double(key);
      else if (attr == "slope_male") t.slope[1] = kv.get_double(key);
      else if (attr == "noise_sd") t.noise_sd = kv.get_double(key);
      else throw ConfigError("cohort spec field '" + key + "': unknown attribute");
    } else {
      throw ConfigError("cohort spec field '" + key + "': unknown key");
    }
  }
  spec.validate();
  return spec;
}

CohortSpec load_cohort_spec(const std::filesystem::path& path, CohortSpec base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open cohort spec '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_cohort_spec(ss.str(), std::move(base));
}

}  // namespace rvae
