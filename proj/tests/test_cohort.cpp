#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rvae/cohort.hpp"
#include "rvae/error.hpp"
#include "support.hpp"

using namespace rvae;

namespace {

struct Fit {
  double slope = 0.0;
  double t_stat = 0.0;
};

// Least squares of one biomarker against SBP within one gender.
Fit slope_fit(const Cohort& c, Gender g, std::size_t feature) {
  std::vector<double> x, y;
  for (const auto& s : c) {
    if (s.gender != g) continue;
    x.push_back(s.sbp_mmhg);
    y.push_back(s.biomarkers[feature]);
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double b = sxy / sxx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sse += std::pow(y[i] - my - b * (x[i] - mx), 2);
  const double se = std::sqrt(sse / (n - 2.0) / sxx);
  return {b, se > 0.0 ? b / se : 0.0};
}

std::size_t idx(Biomarker b) { return static_cast<std::size_t>(b); }

const std::string kHeader =
    "id,gender,sbp_mmhg,iLVEDV,iLVSV,LVEF,LVEDM,LVPER,LVPFR,LVPAFR,LVAC,iRVEDV,RVPER,RVPFR,RVPAFR,RVAC\n";

}  // namespace

TEST_SUITE("cohort") {

TEST_CASE("categorize boundaries") {
  CHECK(categorize(119.9) == SbpCategory::Normotension);
  CHECK(categorize(120.0) == SbpCategory::Prehypertension);
  CHECK(categorize(140.0) == SbpCategory::Prehypertension);
  CHECK(categorize(140.1) == SbpCategory::Hypertension);
  CHECK(to_string(SbpCategory::Prehypertension) == "prehypertension");
}

TEST_CASE("categorize partitions the valid SBP range") {
  Rng rng(1);
  for (int t = 0; t < 10000; ++t) {
    const double sbp = rng.uniform(kSbpMin, kSbpMax);
    const SbpCategory c = categorize(sbp);
    const int hits = (sbp < 120.0) + (sbp > 140.0) + (sbp >= 120.0 && sbp <= 140.0);
    CHECK(hits == 1);
    if (sbp < 120.0) CHECK(c == SbpCategory::Normotension);
    else if (sbp > 140.0) CHECK(c == SbpCategory::Hypertension);
    else CHECK(c == SbpCategory::Prehypertension);
  }
}

TEST_CASE("default cohort matches the reference category counts") {
  const SyntheticCohort s = generate_synthetic(CohortSpec{});
  CHECK(s.subjects.size() == 3600);
  CHECK(s.truth.category_counts == std::array<std::size_t, 3>{1321, 582, 1697});
  std::array<std::size_t, 3> seen{};
  for (const auto& sub : s.subjects) ++seen[static_cast<std::size_t>(sub.category())];
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(std::abs(static_cast<double>(seen[c]) - static_cast<double>(s.truth.category_counts[c])) <=
          0.02 * static_cast<double>(s.truth.category_counts[c]));
  }
  for (const auto& sub : s.subjects) {
    CHECK(sub.sbp_mmhg > kSbpMin);
    CHECK(sub.sbp_mmhg < kSbpMax);
  }
}

TEST_CASE("generator is deterministic in its seed") {
  CohortSpec a;
  a.n_subjects = 200;
  a.seed = 5;
  CHECK(generate_synthetic(a).subjects == generate_synthetic(a).subjects);
  CohortSpec b = a;
  b.seed = 6;
  CHECK(generate_synthetic(a).subjects != generate_synthetic(b).subjects);
}

TEST_CASE("noiseless cohort recovers the planted slopes exactly") {
  CohortSpec spec;
  spec.noise_scale = 0.0;
  spec.n_subjects = 400;
  const SyntheticCohort s = generate_synthetic(spec);
  for (Gender g : {Gender::Female, Gender::Male}) {
    const std::size_t gi = g == Gender::Male ? 1 : 0;
    for (std::size_t f = 0; f < kBiomarkerCount; ++f) {
      const double planted = spec.trends[f].slope[gi];
      CHECK_MESSAGE(std::abs(slope_fit(s.subjects, g, f).slope - planted) < 1e-10, kBiomarkerNames[f]);
    }
  }
}

TEST_CASE("planted trend directions") {
  const auto t = CohortSpec::default_trends();
  for (std::size_t g = 0; g < 2; ++g) {
    CHECK(t[idx(Biomarker::iLVEDV)].slope[g] < 0.0);
    CHECK(t[idx(Biomarker::iRVEDV)].slope[g] == 0.0);
    CHECK(t[idx(Biomarker::LVPAFR)].slope[g] > 0.0);
    CHECK(t[idx(Biomarker::LVPER)].slope[g] > 0.0);
  }
  CHECK(std::abs(t[idx(Biomarker::iLVEDV)].slope[1]) > std::abs(t[idx(Biomarker::iLVEDV)].slope[0]));
  CHECK(std::abs(t[idx(Biomarker::LVPER)].slope[1]) > std::abs(t[idx(Biomarker::LVPER)].slope[0]));
}

TEST_CASE("planted changes are 5 to 20 percent across 100 to 170 mmHg") {
  const CohortSpec spec;
  for (Gender g : {Gender::Female, Gender::Male}) {
    const BiomarkerVector lo = trend_profile(spec, g, 100.0), hi = trend_profile(spec, g, 170.0);
    for (std::size_t f = 0; f < kBiomarkerCount; ++f) {
      if (spec.trends[f].slope[g == Gender::Male] == 0.0) continue;
      const double change = std::abs(hi[f] - lo[f]) / std::abs(trend_profile(spec, g, 120.0)[f]);
      CHECK_MESSAGE(change >= 0.05 - 1e-12, kBiomarkerNames[f]);
      CHECK_MESSAGE(change <= 0.20 + 1e-12, kBiomarkerNames[f]);
    }
  }
}

TEST_CASE("default cohort shows the planted signs at 99 percent confidence") {
  const SyntheticCohort s = generate_synthetic(CohortSpec{});
  const double z99 = 2.326;
  for (Gender g : {Gender::Female, Gender::Male}) {
    const std::size_t gi = g == Gender::Male ? 1 : 0;
    for (std::size_t f = 0; f < kBiomarkerCount; ++f) {
      const double planted = s.truth.spec.trends[f].slope[gi];
      if (planted == 0.0) continue;
      const Fit fit = slope_fit(s.subjects, g, f);
      CHECK_MESSAGE(fit.t_stat * (planted > 0 ? 1.0 : -1.0) > z99, kBiomarkerNames[f]);
    }
  }
}

TEST_CASE("outliers carry a mismatched profile") {
  CohortSpec spec;
  spec.n_subjects = 100;
  spec.n_outliers = 7;
  spec.noise_scale = 0.0;
  const SyntheticCohort s = generate_synthetic(spec);
  CHECK(s.subjects.size() == 107);
  REQUIRE(s.truth.outlier_ids.size() == 7);
  for (const auto& sub : s.subjects) {
    const bool outlier =
        std::find(s.truth.outlier_ids.begin(), s.truth.outlier_ids.end(), sub.id) != s.truth.outlier_ids.end();
    if (!outlier) continue;
    CHECK(sub.sbp_mmhg == 130.0);
    CHECK(sub.category() == SbpCategory::Prehypertension);
    CHECK(sub.biomarkers == trend_profile(spec, sub.gender, 150.0));
  }
  spec.outlier_label_sbp = 150.0;
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
}

TEST_CASE("spec validation names the field") {
  CohortSpec s;
  s.n_subjects = 49;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("n_subjects"), ConfigError);
  s = {};
  s.trends[8].noise_sd = 0.0;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("iRVEDV"), ConfigError);
  s = {};
  s.category_share = {0.5, 0.5, 0.5};
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("category_share"), ConfigError);
  s = {};
  s.hypertension_range = {130.0, 180.0};
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("hypertension_range"), ConfigError);
}

TEST_CASE("spec file parsing") {
  const CohortSpec s = parse_cohort_spec(
      "# comment\nn_subjects = 500\nseed = 9\nnoise_scale = 0.5\n"
      "trend.iLVEDV.slope_male = -0.2\nhypertension_range = 141, 180\n");
  CHECK(s.n_subjects == 500);
  CHECK(s.seed == 9);
  CHECK(s.noise_scale == 0.5);
  CHECK(s.trends[0].slope[1] == -0.2);
  CHECK(s.hypertension_range == std::array<double, 2>{141.0, 180.0});

  CohortSpec base;
  base.n_outliers = 12;
  CHECK(parse_cohort_spec("seed = 1\n", base).n_outliers == 12);

  CHECK_THROWS_AS(parse_cohort_spec("colour = blue\n"), ConfigError);
  CHECK_THROWS_AS(parse_cohort_spec("trend.XYZ.slope_male = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_cohort_spec("trend.iLVEDV.wobble = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_cohort_spec("n_subjects = many\n"), ConfigError);
  CHECK_THROWS_AS(parse_cohort_spec("n_subjects = 10\n"), ConfigError);
}

TEST_CASE("cohort CSV round trip at full precision") {
  CohortSpec spec;
  spec.n_subjects = 150;
  spec.n_outliers = 3;
  const Cohort c = generate_synthetic(spec).subjects;
  const std::string text = format_cohort(c);
  CHECK(text.rfind(kHeader, 0) == 0);
  const CohortLoadResult r = parse_cohort(text);
  CHECK(r.issues.empty());
  CHECK(r.subjects == c);

  const auto dir = test::scratch_dir("cohort_io");
  save_cohort(dir / "c.csv", c);
  CHECK(load_cohort(dir / "c.csv").subjects == c);
}

TEST_CASE("cohort CSV ingestion reports bad rows") {
  std::ostringstream good;
  good << kHeader;
  for (int i = 0; i < 10; ++i) {
    good << "S" << i << (i % 2 ? ",male," : ",female,") << 110 + i;
    for (std::size_t f = 0; f < kBiomarkerCount; ++f) good << ',' << 1.5 + f;
    good << '\n';
  }
  const CohortLoadResult ok = parse_cohort(good.str());
  CHECK(ok.subjects.size() == 10);
  CHECK(ok.issues.empty());

  std::string bad = good.str();
  const auto pos = bad.find(",112,");
  bad.replace(pos, 5, ",abc,");
  const CohortLoadResult r = parse_cohort(bad);
  CHECK(r.subjects.size() == 9);
  REQUIRE(r.issues.size() == 1);
  CHECK(r.issues[0].line == 4);

  std::string range = good.str();
  range.replace(range.find(",113,"), 5, ",300,");
  const CohortLoadResult rr = parse_cohort(range);
  CHECK(rr.subjects.size() == 9);
  CHECK(rr.issues.size() == 1);

  const CohortLoadResult missing = parse_cohort("id,gender,sbp_mmhg,iLVEDV\nS1,male,120,80\n");
  CHECK(missing.fatal);
  CHECK(missing.subjects.empty());
  CHECK_FALSE(missing.issues.empty());
}

TEST_CASE("cohort CSV columns are matched by header") {
  CohortSpec spec;
  spec.n_subjects = 60;
  const Cohort c = generate_synthetic(spec).subjects;
  const std::string text = format_cohort(c);
  // Rotate every line so that the biomarker columns come first.
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    std::rotate(cells.begin(), cells.begin() + 3, cells.end());
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  }
  CHECK(parse_cohort(out.str()).subjects == c);
}

TEST_CASE("ground truth JSON records the planted trends") {
  CohortSpec spec;
  spec.n_subjects = 80;
  spec.n_outliers = 2;
  const SyntheticCohort s = generate_synthetic(spec);
  const auto j = nlohmann::json::parse(ground_truth_json(s.truth));
  CHECK(j["seed"] == 42);
  CHECK(j["trends"]["iLVEDV"]["slope_male"] == spec.trends[0].slope[1]);
  CHECK(j["outliers"]["ids"].size() == 2);
  CHECK(j["category_counts"]["prehypertension"] == s.truth.category_counts[1]);
}

}  // TEST_SUITE
