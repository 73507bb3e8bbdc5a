#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "rvae/analysis.hpp"
#include "rvae/error.hpp"
#include "support.hpp"

using namespace rvae;

namespace {

RVaeModel model_with_regressor(double w0, double w1, double b, std::uint64_t seed = 1) {
  RVaeModel m;
  Rng rng(seed);
  m.initialize(rng);
  for (std::size_t i = 0; i < RVaeModel::kLayerCount; ++i)
    for (double& v : m.layer(i).bias()) v = rng.normal(0.0, 0.3);
  m.regressor().w = {w0, w1};
  m.regressor().b = b;
  return m;
}

double dot(const Latent& a, const Latent& b) { return a[0] * b[0] + a[1] * b[1]; }

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("latent point examples") {
  const RVaeModel a = model_with_regressor(1.0, 0.0, 0.0);
  const Latent z = latent_point_for_sbp(a, 130.0, 0.0);
  CHECK(z[0] == 130.0);
  CHECK(z[1] == 0.0);
  const RVaeModel b = model_with_regressor(1.0, 1.0, 0.0);
  const Latent y = latent_point_for_sbp(b, 130.0, 1.0);
  CHECK(y[0] == 64.0);
  CHECK(y[1] == 64.0);
  const RVaeModel dead = model_with_regressor(0.0, 0.0, 120.0);
  CHECK_THROWS_AS(latent_point_for_sbp(dead, 130.0, 0.0), NumericError);
  CHECK_THROWS_AS(perpendicular_direction(dead), NumericError);
}

TEST_CASE("latent point solves the regression equation") {
  Rng rng(2);
  for (int t = 0; t < 2000; ++t) {
    RVaeModel m = model_with_regressor(rng.normal(0.0, 10.0), rng.normal(0.0, 10.0), rng.normal(130.0, 10.0));
    if (t % 2) m.hyperparams().form = RegressionForm::SeparateDummy;
    m.regressor().w_dummy = rng.normal(0.0, 5.0);
    const double d = static_cast<double>(rng.below(2));
    const double target = rng.uniform(60.0, 260.0);
    const Latent anchor = {rng.normal(0.0, 3.0), rng.normal(0.0, 3.0)};
    const Latent z0 = latent_point_for_sbp(m, target, d);
    const Latent z1 = latent_point_for_sbp(m, target, d, anchor);
    CHECK(std::abs(m.predict_sbp(z0, d) - target) < 1e-9);
    CHECK(std::abs(m.predict_sbp(z1, d) - target) < 1e-9);
    // The default anchor gives the minimum-norm solution: parallel to w.
    const Latent& w = m.regressor().w;
    CHECK(std::abs(z0[0] * w[1] - z0[1] * w[0]) < 1e-9 * (1.0 + std::hypot(z0[0], z0[1]) * std::hypot(w[0], w[1])));
  }
}

TEST_CASE("perpendicular direction is a unit vector orthogonal to w") {
  Rng rng(3);
  for (int t = 0; t < 1000; ++t) {
    const RVaeModel m = model_with_regressor(rng.normal(0.0, 10.0), rng.normal(0.0, 10.0), 120.0);
    const Latent u = perpendicular_direction(m);
    CHECK(std::abs(dot(u, u) - 1.0) < 1e-12);
    CHECK(std::abs(dot(u, m.regressor().w)) < 1e-12 * std::hypot(m.regressor().w[0], m.regressor().w[1]));
    // Moving along u leaves the prediction unchanged.
    const Latent z = latent_point_for_sbp(m, 140.0, 1.0);
    const double s = rng.normal(0.0, 5.0);
    CHECK(std::abs(m.predict_sbp({z[0] + s * u[0], z[1] + s * u[1]}, 1.0) - 140.0) < 1e-9);
  }
}

TEST_CASE("group anchors land on the target SBP") {
  RVaeModel m = model_with_regressor(3.0, -2.0, 125.0);
  m.latent_paths = std::array<GroupLatentPath, 2>{GroupLatentPath{{0.5, -0.2}, {0.1, -0.05}},
                                                   GroupLatentPath{{-0.3, 0.4}, {0.2, 0.05}}};
  for (auto policy : {TraversalAnchor::GroupPath, TraversalAnchor::GroupCentroid, TraversalAnchor::Origin}) {
    for (Gender g : {Gender::Female, Gender::Male}) {
      const double d = m.hyperparams().dummy.value(g);
      const Latent z = group_anchor(m, g, policy, 150.0);
      CHECK(std::abs(m.predict_sbp(z, d) - 150.0) < 1e-9);
    }
    CHECK(traversal_anchor_from_string(to_string(policy)) == policy);
  }
  CHECK_THROWS_AS(traversal_anchor_from_string("nowhere"), ConfigError);
  RVaeModel bare = m;
  bare.latent_paths.reset();
  CHECK(group_anchor(bare, Gender::Male, TraversalAnchor::GroupPath, 150.0) ==
        group_anchor(bare, Gender::Male, TraversalAnchor::Origin, 150.0));
}

TEST_CASE("traversal layout and determinism") {
  const RVaeModel m = model_with_regressor(4.0, 1.0, 128.0);
  Rng r1(5), r2(5);
  const TraversalReport a = traverse(m, r1), b = traverse(m, r2);
  CHECK(a.steps == std::vector<double>{100, 110, 120, 130, 140, 150, 160, 170});
  CHECK(a.cells.size() == 16);
  CHECK(a.cell(0, Gender::Female).gender == Gender::Female);
  CHECK(a.cell(7, Gender::Male).sbp == 170.0);
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    CHECK(a.cells[i].mean == b.cells[i].mean);
    for (double s : a.cells[i].std) CHECK(s >= 0.0);
  }
  const std::string csv = to_csv(a);
  CHECK(csv.rfind("sbp_mmhg,group,biomarker,mean,std\n", 0) == 0);
  CHECK(count_lines(csv) == 1 + 8 * 2 * 13);
  const auto j = to_json(a);
  CHECK(j.contains("tendency"));
  CHECK(j["cells"].size() == 16);
}

TEST_CASE("traversal with zero perpendicular spread has zero std") {
  const RVaeModel m = model_with_regressor(4.0, 1.0, 128.0);
  TraversalOptions opt;
  opt.sigma_perp = 0.0;
  Rng rng(6);
  const TraversalReport r = traverse(m, rng, opt);
  for (const auto& c : r.cells)
    for (double s : c.std) CHECK(s == 0.0);
  // With no spread each step mean is the decoded anchor.
  const auto x = m.decode(group_anchor(m, Gender::Male, opt.anchor, 130.0));
  const auto& cell = r.cell(3, Gender::Male);
  for (std::size_t f = 0; f < kBiomarkerCount; ++f) CHECK(cell.mean[f] == doctest::Approx(x[f]).epsilon(1e-12));
}

TEST_CASE("tendency slopes are least squares over the step means") {
  const RVaeModel m = model_with_regressor(2.0, 3.0, 130.0);
  Rng rng(7);
  const TraversalReport r = traverse(m, rng);
  for (Gender g : {Gender::Female, Gender::Male}) {
    for (std::size_t f = 0; f < kBiomarkerCount; ++f) {
      double mx = 0.0, my = 0.0;
      for (std::size_t s = 0; s < r.steps.size(); ++s) {
        mx += r.steps[s];
        my += r.cell(s, g).mean[f];
      }
      mx /= 8.0;
      my /= 8.0;
      double sxx = 0.0, sxy = 0.0;
      for (std::size_t s = 0; s < r.steps.size(); ++s) {
        sxx += (r.steps[s] - mx) * (r.steps[s] - mx);
        sxy += (r.steps[s] - mx) * (r.cell(s, g).mean[f] - my);
      }
      CHECK(r.slope_of(g, static_cast<Biomarker>(f)) == doctest::Approx(sxy / sxx).epsilon(1e-10));
    }
  }
}

TEST_CASE("symmetric sampling is invariant to the sign of the perpendicular") {
  RVaeModel m = model_with_regressor(2.0, 3.0, 130.0);
  TraversalOptions opt;
  opt.symmetric = true;
  Rng r1(8);
  const TraversalReport a = traverse(m, r1, opt);
  // Reflecting the latent space through the w axis flips u but not w.
  // Build the mirrored model by swapping the roles of u and -u: negate the
  // decoder input weights along u.
  const Latent u = perpendicular_direction(m);
  RVaeModel mirrored = m;
  auto& first = mirrored.layer(4);
  for (std::size_t o = 0; o < first.out_dim(); ++o) {
    const double wu = first.weights()(o, 0) * u[0] + first.weights()(o, 1) * u[1];
    first.weights()(o, 0) -= 2.0 * wu * u[0];
    first.weights()(o, 1) -= 2.0 * wu * u[1];
  }
  Rng r2(8);
  const TraversalReport b = traverse(mirrored, r2, opt);
  for (std::size_t i = 0; i < a.cells.size(); ++i)
    for (std::size_t f = 0; f < kBiomarkerCount; ++f)
      CHECK(a.cells[i].mean[f] == doctest::Approx(b.cells[i].mean[f]).epsilon(1e-9));
  opt.samples = 21;
  CHECK_THROWS_AS(opt.validate(), ConfigError);
}

TEST_CASE("traversal options validation") {
  TraversalOptions o;
  o.sbp_step = 0.0;
  CHECK_THROWS_AS(o.validate(), ConfigError);
  o = {};
  o.sigma_perp = -1.0;
  CHECK_THROWS_AS(o.validate(), ConfigError);
  o = {};
  o.samples = 1;
  CHECK_THROWS_AS(o.validate(), ConfigError);
}

TEST_CASE("find_mispredicted with trivial predictors") {
  const Cohort c = test::small_cohort(9, 300);
  const auto perfect = find_mispredicted([](const Subject& s) { return s.sbp_mmhg; }, c);
  CHECK(perfect.predicted_normo.empty());
  CHECK(perfect.predicted_hyper.empty());

  const auto low = find_mispredicted([](const Subject&) { return 100.0; }, c);
  std::size_t prehyp = 0;
  for (const auto& s : c) prehyp += s.category() == SbpCategory::Prehypertension;
  CHECK(low.predicted_normo.size() == prehyp);
  CHECK(low.predicted_hyper.empty());

  Rng rng(10);
  const auto noisy = find_mispredicted([&](const Subject& s) { return s.sbp_mmhg + rng.normal(0.0, 15.0); }, c);
  std::set<std::size_t> seen;
  for (auto list : {&noisy.predicted_normo, &noisy.predicted_hyper})
    for (std::size_t i : *list) {
      CHECK(c[i].category() == SbpCategory::Prehypertension);
      CHECK(seen.insert(i).second);
    }

  Cohort normo;
  for (const auto& s : c)
    if (s.category() == SbpCategory::Normotension) normo.push_back(s);
  CHECK_THROWS_AS(find_mispredicted([](const Subject&) { return 0.0; }, normo), ValidationError);
}

TEST_CASE("decomposition is zero when the prediction is exact") {
  const RVaeModel m = model_with_regressor(4.0, 1.0, 128.0);
  const Cohort c = test::small_cohort(11, 100);
  Rng rng(12);
  for (const auto& s : c) {
    const SubjectDecomposition d = decompose_subject(m, s, 0, s.sbp_mmhg);
    for (std::size_t f = 0; f < kBiomarkerCount; ++f)
      if (!d.flagged[f]) CHECK(d.pct_diff[f] == 0.0);
  }
}

TEST_CASE("decomposition percentage differences and flags") {
  RVaeModel m = model_with_regressor(4.0, 1.0, 128.0);
  m.scaler.mean.fill(10.0);
  m.scaler.std.fill(2.0);
  m.scaler.mean[2] = 0.0;
  auto& out = m.layer(6);
  for (double& w : out.weights().data()) w = 0.0;
  out.bias()[2] = 0.0;  // decoded feature 2 is exactly 0 everywhere
  Subject s;
  s.id = "P1";
  s.gender = Gender::Male;
  s.sbp_mmhg = 130.0;
  const SubjectDecomposition d = decompose_subject(m, s, 5, 150.0);
  CHECK(d.index == 5);
  CHECK(d.flagged[2]);
  CHECK(d.pct_diff[2] == 0.0);
  for (std::size_t f = 0; f < kBiomarkerCount; ++f)
    if (f != 2) CHECK(d.pct_diff[f] == 0.0);  // constant decoder: no difference

  const RVaeModel live = model_with_regressor(4.0, 1.0, 128.0);
  const SubjectDecomposition e = decompose_subject(live, s, 0, 150.0);
  const auto xt = live.scaler.invert_array(live.decode(group_anchor(live, s.gender, TraversalAnchor::GroupPath, 130.0)));
  const auto xp = live.scaler.invert_array(live.decode(group_anchor(live, s.gender, TraversalAnchor::GroupPath, 150.0)));
  for (std::size_t f = 0; f < kBiomarkerCount; ++f)
    if (!e.flagged[f]) CHECK(e.pct_diff[f] == doctest::Approx(100.0 * (xp[f] - xt[f]) / xt[f]).epsilon(1e-12));
}

TEST_CASE("misprediction report aggregates per list") {
  const RVaeModel m = model_with_regressor(4.0, 1.0, 128.0);
  const Cohort c = test::small_cohort(13, 300);
  MispredictionLists lists;
  for (std::size_t i = 0; i < c.size() && lists.predicted_hyper.size() < 4; ++i)
    if (c[i].category() == SbpCategory::Prehypertension) lists.predicted_hyper.push_back(i);
  const MispredictionReport r = misprediction_decomposition(m, c, lists);
  CHECK(r.predicted_normo.subjects.empty());
  REQUIRE(r.predicted_hyper.subjects.size() == 4);
  for (std::size_t f = 0; f < kBiomarkerCount; ++f) {
    CHECK(std::isnan(r.predicted_normo.mean_pct_diff[f]));
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : r.predicted_hyper.subjects)
      if (!s.flagged[f]) {
        sum += s.pct_diff[f];
        ++n;
      }
    CHECK(r.predicted_hyper.contributing[f] == n);
    CHECK(r.predicted_hyper.mean_pct_diff[f] == doctest::Approx(sum / static_cast<double>(n)).epsilon(1e-12));
  }
  const std::string csv = to_csv(r);
  CHECK(csv.rfind("list,biomarker,mean_pct_diff,n_subjects,n_flagged\n", 0) == 0);
  CHECK(count_lines(csv) == 1 + 2 * 13);
  CHECK(to_json(r).contains("predicted_hypertensive"));
  CHECK_THROWS_AS(misprediction_decomposition(m, c, MispredictionLists{}), ValidationError);
}

}  // TEST_SUITE
