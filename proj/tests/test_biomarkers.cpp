#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rvae/biomarkers.hpp"
#include "rvae/cohort.hpp"
#include "rvae/error.hpp"
#include "rvae/rng.hpp"
#include "support.hpp"

using namespace rvae;

namespace {

VolumeCurve scaled(VolumeCurve c, double k) {
  for (auto& f : c.frames) f.volume_ml *= k;
  return c;
}

// Linear resampling of one cycle onto `n` uniformly spaced frames.
VolumeCurve resampled(const CurveShape& shape, std::size_t n, Chamber ch) {
  CurveShape s = shape;
  s.frames = n;
  return synthesize_curve(s, ch);
}

bool has_reason(const QcVerdict& v, std::string_view rule) {
  return std::any_of(v.reasons.begin(), v.reasons.end(),
                     [&](const std::string& r) { return r.find(rule) != std::string::npos; });
}

const Anthropometrics kAdult{70.0, 170.0, Gender::Female};

}  // namespace

TEST_SUITE("biomarkers") {

TEST_CASE("DuBois body surface area") {
  // 0.007184 * 70^0.425 * 170^0.725
  CHECK(bsa_dubois(kAdult) == doctest::Approx(1.8097).epsilon(1e-4));
  // Height must lie strictly above 100 cm, so the monotonicity pair sits at 101 cm.
  CHECK(bsa_dubois({100.0, 101.0, Gender::Male}) > bsa_dubois({50.0, 101.0, Gender::Male}));
  CHECK_THROWS_AS(bsa_dubois({100.0, 100.0, Gender::Male}), ValidationError);
  CHECK(bsa_dubois(kAdult) == bsa_dubois(kAdult));
  CHECK_THROWS_AS(bsa_dubois({10.0, 170.0, Gender::Male}), ValidationError);
  CHECK_THROWS_AS(bsa_dubois({70.0, 260.0, Gender::Male}), ValidationError);
}

TEST_CASE("analytic synthetic curve matches closed-form indices within 2%") {
  for (std::size_t frames : {50u, 80u, 100u}) {
    CurveShape shape;
    shape.frames = frames;
    for (auto [edv, esv] : {std::pair{150.0, 60.0}, std::pair{120.0, 55.0}, std::pair{180.0, 90.0}}) {
      shape.edv_ml = edv;
      shape.esv_ml = esv;
      const ChamberFunction truth = synthesized_function(shape);
      const ChamberFunction got = analyze_chamber(synthesize_curve(shape, Chamber::LV));
      CAPTURE(frames);
      CAPTURE(edv);
      CHECK(got.edv == doctest::Approx(truth.edv).epsilon(0.02));
      CHECK(got.esv == doctest::Approx(truth.esv).epsilon(0.02));
      CHECK(got.sv == doctest::Approx(truth.sv).epsilon(0.02));
      CHECK(got.ef == doctest::Approx(truth.ef).epsilon(0.02));
      CHECK(got.per == doctest::Approx(truth.per).epsilon(0.02));
      CHECK(got.pfr == doctest::Approx(truth.pfr).epsilon(0.02));
    }
  }
}

TEST_CASE("volume scaling homogeneity") {
  const VolumeCurve base = synthesize_curve(CurveShape{}, Chamber::LV);
  const ChamberFunction a = analyze_chamber(base);
  for (double k : {2.0, 0.5, 1.7}) {
    const ChamberFunction b = analyze_chamber(scaled(base, k));
    CHECK(b.edv == doctest::Approx(k * a.edv).epsilon(1e-12));
    CHECK(b.esv == doctest::Approx(k * a.esv).epsilon(1e-12));
    CHECK(b.sv == doctest::Approx(k * a.sv).epsilon(1e-12));
    CHECK(b.per == doctest::Approx(k * a.per).epsilon(1e-12));
    CHECK(b.pfr == doctest::Approx(k * a.pfr).epsilon(1e-12));
    CHECK(b.pafr == doctest::Approx(k * a.pafr).epsilon(1e-12));
    CHECK(b.ef == doctest::Approx(a.ef).epsilon(1e-12));
    CHECK(b.ac == doctest::Approx(a.ac).epsilon(1e-12));
  }
}

TEST_CASE("doubling the frame count moves every biomarker by less than 3%") {
  CurveShape shape;
  shape.frames = 50;
  VolumeCurve lv = resampled(shape, 50, Chamber::LV), rv = resampled(shape, 50, Chamber::RV);
  VolumeCurve lv2 = resampled(shape, 100, Chamber::LV), rv2 = resampled(shape, 100, Chamber::RV);
  lv.lv_mass_g = lv2.lv_mass_g = 110.0;
  const BiomarkerVector a = extract_biomarkers(lv, rv, kAdult);
  const BiomarkerVector b = extract_biomarkers(lv2, rv2, kAdult);
  for (std::size_t i = 0; i < kBiomarkerCount; ++i) {
    CAPTURE(kBiomarkerNames[i]);
    CHECK(std::abs(b[i] - a[i]) <= 0.03 * std::abs(a[i]));
  }
}

TEST_CASE("indexing identities are exact") {
  CurveShape ls, rs;
  rs.edv_ml = 160.0;
  rs.esv_ml = 75.0;
  VolumeCurve lv = synthesize_curve(ls, Chamber::LV);
  const VolumeCurve rv = synthesize_curve(rs, Chamber::RV);
  lv.lv_mass_g = 120.0;
  const double bsa = bsa_dubois(kAdult);
  const ChamberFunction l = analyze_chamber(lv), r = analyze_chamber(rv);
  const BiomarkerVector b = extract_biomarkers(lv, rv, kAdult);
  CHECK(b[Biomarker::iLVEDV] == l.edv / bsa);
  CHECK(b[Biomarker::iLVSV] == l.sv / bsa);
  CHECK(b[Biomarker::iRVEDV] == r.edv / bsa);
  CHECK(b[Biomarker::LVEDM] == 120.0);
  CHECK(b[Biomarker::LVEF] == l.ef);
  CHECK(b[Biomarker::LVPER] == l.per);
  CHECK(b[Biomarker::RVAC] == r.ac);
  // BSA 2 m^2 and EDV 180 mL index to 90 mL/m^2.
  CHECK(180.0 / 2.0 == 90.0);
}

TEST_CASE("extracted biomarkers satisfy their domain invariants") {
  Rng rng(31);
  for (int t = 0; t < 50; ++t) {
    CurveShape s;
    s.edv_ml = rng.uniform(100.0, 220.0);
    s.esv_ml = s.edv_ml * rng.uniform(0.3, 0.6);
    s.frames = 30 + rng.below(40);
    VolumeCurve lv = synthesize_curve(s, Chamber::LV);
    const VolumeCurve rv = synthesize_curve(s, Chamber::RV);
    lv.lv_mass_g = rng.uniform(60.0, 180.0);
    const BiomarkerVector b = extract_biomarkers(lv, rv, {rng.uniform(45.0, 120.0), rng.uniform(150.0, 200.0), Gender::Male});
    for (double v : b.values) CHECK(std::isfinite(v));
    for (auto pct : {Biomarker::LVEF, Biomarker::LVAC, Biomarker::RVAC}) CHECK((b[pct] > 0.0 && b[pct] < 100.0));
    for (auto pos : {Biomarker::iLVEDV, Biomarker::iLVSV, Biomarker::iRVEDV, Biomarker::LVPER, Biomarker::LVPFR,
                     Biomarker::LVPAFR, Biomarker::RVPER, Biomarker::RVPFR, Biomarker::RVPAFR}) {
      CHECK(b[pos] > 0.0);
    }
  }
}

TEST_CASE("missing LV mass is a validation error") {
  const VolumeCurve lv = synthesize_curve(CurveShape{}, Chamber::LV);
  CHECK_THROWS_AS(extract_biomarkers(lv, lv, kAdult), ValidationError);
}

TEST_CASE("qc examples") {
  const VolumeCurve good = synthesize_curve(CurveShape{}, Chamber::LV);
  const QcVerdict ok = qc_screen(good);
  CHECK(ok.passed);
  CHECK(ok.reasons.empty());

  VolumeCurve zeroed = good;
  zeroed.frames[20].volume_ml = 0.0;
  const QcVerdict z = qc_screen(zeroed);
  CHECK_FALSE(z.passed);
  CHECK(has_reason(z, qc_rule::kVolumeJump));

  VolumeCurve flat = good;
  for (auto& f : flat.frames) f.volume_ml = 100.0;
  const QcVerdict fl = qc_screen(flat);
  CHECK_FALSE(fl.passed);
  CHECK(has_reason(fl, qc_rule::kEjectionFraction));

  VolumeCurve few = good;
  few.frames.resize(8);
  CHECK(has_reason(qc_screen(few), qc_rule::kTooFewFrames));

  VolumeCurve open = good;
  open.frames.back().volume_ml = open.frames.front().volume_ml * 0.6;
  CHECK(has_reason(qc_screen(open), qc_rule::kCycleNotClosed));

  VolumeCurve backwards = good;
  std::swap(backwards.frames[3].time_ms, backwards.frames[4].time_ms);
  CHECK(has_reason(qc_screen(backwards), qc_rule::kNonIncreasingTime));
}

TEST_CASE("qc verdict passed iff no reasons, and is deterministic") {
  Rng rng(8);
  for (int t = 0; t < 100; ++t) {
    VolumeCurve c = synthesize_curve(CurveShape{}, Chamber::RV);
    if (rng.uniform() < 0.5) c.frames[rng.below(c.frames.size())].volume_ml *= rng.uniform(0.0, 2.0);
    const QcVerdict a = qc_screen(c, c), b = qc_screen(c, c);
    CHECK(a.passed == a.reasons.empty());
    CHECK(a.reasons == b.reasons);
  }
}

TEST_CASE("extraction rejects QC failures with the verdict attached") {
  VolumeCurve lv = synthesize_curve(CurveShape{}, Chamber::LV);
  lv.lv_mass_g = 100.0;
  VolumeCurve rv = synthesize_curve(CurveShape{}, Chamber::RV);
  rv.frames[10].volume_ml = 0.0;
  try {
    extract_biomarkers(lv, rv, kAdult);
    FAIL("expected QcRejection");
  } catch (const QcRejection& e) {
    CHECK_FALSE(e.verdict().passed);
    CHECK(e.verdict().reasons.front().rfind("rv.", 0) == 0);
  }
}

TEST_CASE("curve and sidecar files round-trip") {
  const auto dir = test::scratch_dir("curves");
  CurvePair p{synthesize_curve(CurveShape{}, Chamber::LV), synthesize_curve(CurveShape{}, Chamber::RV)};
  write_curve_csv(dir / "a.curve.csv", p);
  const CurvePair q = read_curve_csv(dir / "a.curve.csv");
  REQUIRE(q.lv.frames.size() == p.lv.frames.size());
  for (std::size_t i = 0; i < p.lv.frames.size(); ++i) {
    CHECK(q.lv.frames[i].volume_ml == p.lv.frames[i].volume_ml);
    CHECK(q.rv.frames[i].time_ms == p.rv.frames[i].time_ms);
  }
  SubjectSidecar s{{82.0, 181.0, Gender::Male}, 130.0, 128.5};
  write_sidecar_csv(dir / "a.subject.csv", s);
  const SubjectSidecar t = read_sidecar_csv(dir / "a.subject.csv");
  CHECK(t.anthro.weight_kg == 82.0);
  CHECK(t.anthro.gender == Gender::Male);
  CHECK(t.sbp_mmhg.value() == 128.5);
  CHECK_THROWS_AS(read_curve_csv(dir / "missing.csv"), ValidationError);
}

TEST_CASE("SBP category thresholds") {
  CHECK(categorize(119.9) == SbpCategory::Normotension);
  CHECK(categorize(120.0) == SbpCategory::Prehypertension);
  CHECK(categorize(140.0) == SbpCategory::Prehypertension);
  CHECK(categorize(140.1) == SbpCategory::Hypertension);
}

TEST_CASE("biomarker names and genders") {
  for (std::size_t i = 0; i < kBiomarkerCount; ++i) {
    CHECK(biomarker_from_name(kBiomarkerNames[i]).value() == static_cast<Biomarker>(i));
  }
  CHECK_FALSE(biomarker_from_name("LVXYZ").has_value());
  CHECK(gender_from_string("F") == Gender::Female);
  CHECK(gender_from_string("Male") == Gender::Male);
  CHECK_THROWS(gender_from_string("x"));
}

}  // TEST_SUITE
