#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "rvae/baselines.hpp"
#include "rvae/error.hpp"
#include "support.hpp"

using namespace rvae;

namespace {

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

Matrix from_eigen(const Eigen::MatrixXd& e) {
  Matrix m(e.rows(), e.cols());
  for (Eigen::Index i = 0; i < e.rows(); ++i)
    for (Eigen::Index j = 0; j < e.cols(); ++j) m(i, j) = e(i, j);
  return m;
}

double rmsd(std::span<const double> y, std::span<const double> p) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - p[i]) * (y[i] - p[i]);
  return std::sqrt(s / static_cast<double>(y.size()));
}

struct Regression {
  Matrix x;
  std::vector<double> y;
};

Regression random_regression(Rng& rng, std::size_t n, std::size_t p, double noise = 0.5) {
  Regression r{test::random_matrix(rng, n, p), std::vector<double>(n)};
  const auto beta = test::random_vector(rng, p, 2.0);
  const double b0 = rng.normal(0.0, 5.0);
  for (std::size_t i = 0; i < n; ++i) {
    double v = b0 + rng.normal(0.0, noise);
    for (std::size_t j = 0; j < p; ++j) v += r.x(i, j) * beta[j];
    r.y[i] = v;
  }
  return r;
}

std::vector<double> forest_predictions(const ForestModel& f, const Matrix& x) {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = f.predict(x.row_span(i));
  return out;
}

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("soft threshold") {
  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(-3.0, 1.0) == -2.0);
  CHECK(soft_threshold(0.5, 1.0) == 0.0);
  CHECK(soft_threshold(-1.0, 1.0) == 0.0);
}

TEST_CASE("lasso with lambda 0 matches the OLS normal equations") {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 40 + rng.below(200);
    const std::size_t p = 2 + rng.below(12);
    const Regression r = random_regression(rng, n, p);
    Eigen::MatrixXd a(n, p + 1);
    a.col(0).setOnes();
    a.rightCols(p) = to_eigen(r.x);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(r.y.data(), n);
    const Eigen::VectorXd ols = (a.transpose() * a).ldlt().solve(a.transpose() * y);

    LassoOptions opt;
    opt.tol = 1e-12;
    opt.max_iter = 100000;
    const LassoModel m = lasso_fit(r.x, r.y, 0.0, opt);
    CHECK(m.converged);
    const double scale = ols.tail(p).norm();
    for (std::size_t j = 0; j < p; ++j)
      CHECK(std::abs(m.coefficients[j] - ols(j + 1)) / scale < 1e-6);
    CHECK(std::abs(m.intercept - ols(0)) < 1e-6 * std::max(1.0, std::abs(ols(0))));
  }
}

TEST_CASE("orthonormal design matches soft thresholding") {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 30 + rng.below(50);
    const std::size_t p = 2 + rng.below(10);
    Eigen::MatrixXd raw = to_eigen(test::random_matrix(rng, n, p));
    raw.rowwise() -= raw.colwise().mean();
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(raw).householderQ() *
                              Eigen::MatrixXd::Identity(n, p);
    // Centered columns with x_j^T x_j = n.
    const Matrix x = from_eigen(q * std::sqrt(static_cast<double>(n)));
    std::vector<double> y = test::random_vector(rng, n, 3.0);
    const double lambda = rng.uniform(0.0, 1.5);
    const LassoModel m = lasso_fit(x, y, lambda);
    const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    for (std::size_t j = 0; j < p; ++j) {
      double xty = 0.0;
      for (std::size_t i = 0; i < n; ++i) xty += x(i, j) * (y[i] - ybar);
      CHECK(std::abs(m.coefficients[j] - soft_threshold(xty / static_cast<double>(n), lambda)) < 1e-8);
    }
    CHECK(std::abs(m.intercept - ybar) < 1e-8);
  }
}

TEST_CASE("lambda at lambda_max zeroes every coefficient") {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const Regression r = random_regression(rng, 50 + rng.below(50), 13);
    const double lmax = lasso_lambda_max(r.x, r.y);
    const LassoModel at = lasso_fit(r.x, r.y, lmax);
    CHECK(at.nonzero() == 0);
    CHECK(lasso_fit(r.x, r.y, lmax * 3.0).nonzero() == 0);
    CHECK(lasso_fit(r.x, r.y, lmax * 0.9).nonzero() > 0);
    const double mean = std::accumulate(r.y.begin(), r.y.end(), 0.0) / static_cast<double>(r.y.size());
    CHECK(at.intercept == doctest::Approx(mean).epsilon(1e-12));
  }
}

TEST_CASE("lasso objective never increases across sweeps") {
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const Regression r = random_regression(rng, 60, 13, 3.0);
    LassoOptions opt;
    opt.record_objective = true;
    const LassoModel m = lasso_fit(r.x, r.y, rng.uniform(0.0, 1.0), opt);
    REQUIRE(m.objective_trace.size() == m.sweeps);
    for (std::size_t s = 1; s < m.objective_trace.size(); ++s)
      CHECK(m.objective_trace[s] <= m.objective_trace[s - 1] * (1.0 + 1e-14));
    CHECK(m.objective_trace.back() == doctest::Approx(lasso_objective(r.x, r.y, m)).epsilon(1e-12));
  }
}

TEST_CASE("lasso sparsity is monotone along a lambda path") {
  Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    const Regression r = random_regression(rng, 80, 13, 4.0);
    const double lmax = lasso_lambda_max(r.x, r.y);
    std::size_t prev = 13;
    for (int s = 0; s <= 30; ++s) {
      const double lambda = lmax * std::pow(10.0, -3.0 + 3.0 * s / 30.0);
      const std::size_t nz = lasso_fit(r.x, r.y, lambda).nonzero();
      CHECK(nz <= prev);
      prev = nz;
    }
    CHECK(prev == 0);
  }
}

TEST_CASE("lasso reports non-convergence") {
  Rng rng(6);
  const Regression r = random_regression(rng, 50, 13);
  LassoOptions opt;
  opt.max_iter = 1;
  opt.tol = 1e-15;
  const LassoModel m = lasso_fit(r.x, r.y, 0.0, opt);
  CHECK_FALSE(m.converged);
  CHECK(m.sweeps == 1);
}

TEST_CASE("forest on constant targets predicts the constant") {
  Rng rng(7);
  const Matrix x = test::random_matrix(rng, 60, 13);
  const std::vector<double> y(60, 123.5);
  ForestParams p;
  p.n_trees = 20;
  const ForestModel f = forest_fit(x, y, p);
  for (std::size_t i = 0; i < 20; ++i) CHECK(f.predict(test::random_vector(rng, 13)) == 123.5);
}

TEST_CASE("single depth-1 tree splits a binary feature") {
  Matrix x(20, 1);
  std::vector<double> y(20);
  for (std::size_t i = 0; i < 20; ++i) {
    x(i, 0) = static_cast<double>(i % 2);
    y[i] = i % 2 ? 10.0 : 0.0;
  }
  ForestParams p;
  p.n_trees = 1;
  p.max_depth = 1;
  p.min_leaf = 1;
  p.features_per_split = 1;
  p.bootstrap = false;
  const ForestModel f = forest_fit(x, y, p);
  CHECK(f.predict(std::vector<double>{0.0}) == 0.0);
  CHECK(f.predict(std::vector<double>{1.0}) == 10.0);
  CHECK(f.trees[0].depth() == 1);
}

TEST_CASE("forest structure invariants and training fit") {
  Rng rng(8);
  for (int t = 0; t < 8; ++t) {
    const Regression r = random_regression(rng, 80 + rng.below(120), 13, 5.0);
    ForestParams p;
    p.n_trees = 15;
    p.max_depth = 1 + rng.below(10);
    p.min_leaf = 1 + rng.below(8);
    p.seed = rng.next_u64();
    const ForestModel f = forest_fit(r.x, r.y, p);
    REQUIRE(f.trees.size() == 15);
    for (const auto& tree : f.trees) {
      CHECK(tree.depth() <= p.max_depth);
      for (const auto& node : tree.nodes)
        if (node.feature < 0) CHECK(node.samples >= p.min_leaf);
    }
    const double mean = std::accumulate(r.y.begin(), r.y.end(), 0.0) / static_cast<double>(r.y.size());
    const std::vector<double> mean_pred(r.y.size(), mean);
    CHECK(rmsd(r.y, forest_predictions(f, r.x)) <= rmsd(r.y, mean_pred));
  }
}

TEST_CASE("forest is fixed by its seed, not by the thread count or tree order") {
  Rng rng(9);
  const Regression r = random_regression(rng, 150, 13, 5.0);
  ForestParams p;
  p.n_trees = 24;
  p.seed = 99;
  const ForestModel a = forest_fit(r.x, r.y, p, 1);
  const ForestModel b = forest_fit(r.x, r.y, p, 3);
  p.seed = 100;
  const ForestModel c = forest_fit(r.x, r.y, p, 1);
  const auto pa = forest_predictions(a, r.x);
  CHECK(pa == forest_predictions(b, r.x));
  CHECK(pa != forest_predictions(c, r.x));
  ForestModel reversed = a;
  std::reverse(reversed.trees.begin(), reversed.trees.end());
  const auto pr = forest_predictions(reversed, r.x);
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pr[i] == doctest::Approx(pa[i]).epsilon(1e-12));
}

TEST_CASE("baselines find the planted signal and nothing in shuffled labels") {
  const Cohort c = test::small_cohort(10, 1000);
  const SplitPlan plan = make_splits(c, 10);
  ForestParams fp;
  fp.n_trees = 40;
  auto score = [&](const Cohort& cohort) {
    const LassoRegressor lasso = fit_lasso_regressor(cohort, plan.train, 0.1);
    const ForestRegressor forest = fit_forest_regressor(cohort, plan.train, fp);
    const std::vector<NamedPredictor> models = {
        {"Lasso", [&](const Subject& s) { return lasso.predict(s.biomarkers); }},
        {"RandomForest", [&](const Subject& s) { return forest.predict(s.biomarkers); }}};
    return compare(models, cohort, plan.test);
  };
  const ComparisonReport real = score(c);
  REQUIRE(real.rows.size() == 2);
  for (const auto& row : real.rows) CHECK(row.metrics.r2 > 0.3);

  Cohort shuffled = c;
  Rng rng(11);
  for (std::size_t i = shuffled.size() - 1; i > 0; --i)
    std::swap(shuffled[i].sbp_mmhg, shuffled[rng.below(i + 1)].sbp_mmhg);
  for (const auto& row : score(shuffled).rows) CHECK(row.metrics.r2 <= 0.05);
}

TEST_CASE("lasso regressor standardizes with training statistics") {
  const Cohort c = test::small_cohort(12, 200);
  const SplitPlan plan = make_splits(c, 12);
  const LassoRegressor r = fit_lasso_regressor(c, plan.train, 0.05);
  std::vector<BiomarkerVector> rows;
  for (std::size_t i : plan.train) rows.push_back(c[i].biomarkers);
  CHECK(r.scaler == FeatureScaler::fit(rows));
  const Matrix z = feature_matrix(c, plan.test, r.scaler);
  const Subject& s = c[plan.test[0]];
  CHECK(r.predict(s.biomarkers) == doctest::Approx(r.model.predict(z.row_span(0))).epsilon(1e-14));
  CHECK(sbp_targets(c, plan.test).front() == s.sbp_mmhg);
}

TEST_CASE("baseline grid searches") {
  const Cohort c = test::small_cohort(13, 300);
  const SplitPlan plan = make_splits(c, 13);
  const auto dev = plan.development();
  const std::vector<double> lambdas = {0.01, 0.1, 1000.0};
  const GridResult l = lasso_grid_search(c, dev, lambdas, 3, 13);
  CHECK(l.cells.size() == 3);
  CHECK(l.best != 2);
  BaselineGrid grid;
  grid.forest.n_trees = 10;
  const auto cells = grid.forest_cells();
  CHECK(cells.size() == 4);
  const GridResult f1 = forest_grid_search(c, dev, cells, 3, 13, 1);
  const GridResult f2 = forest_grid_search(c, dev, cells, 3, 13, 2);
  CHECK(f1.best == f2.best);
  for (std::size_t i = 0; i < cells.size(); ++i) CHECK(f1.cells[i].fold_rmsd == f2.cells[i].fold_rmsd);
}

TEST_CASE("comparison report formats") {
  ComparisonReport r;
  r.n_test = 4;
  r.rows = {{"R-VAE", {11.36, 0.10, 0.69, 4}}, {"Lasso", {13.2, 0.11, 0.35, 4}}};
  const std::string table = format_table(r);
  CHECK(table.find("Model") == 0);
  CHECK(table.find("R-VAE") != std::string::npos);
  CHECK(table.find("11.36") != std::string::npos);
  CHECK(table.find("0.690") != std::string::npos);
  CHECK(table.find("n_test = 4") != std::string::npos);

  const auto j = to_json(r);
  CHECK(j["n_test"] == 4);
  CHECK(j["nrmsd_normalizer"] == "range");
  CHECK(j["models"]["Lasso"]["rmsd"] == 13.2);
  CHECK(to_csv(r) == "model,rmsd,nrmsd,r2,n\nR-VAE,11.36,0.1,0.69,4\nLasso,13.2,0.11,0.35,4\n");

  GridResult g;
  g.best = 1;
  g.cells = {{0, {1.0, 2.0}, 1.5, false, ""}, {1, {1.0, 1.0}, 1.0, false, ""}};
  CHECK(grid_to_csv(g, {"a", "b"}) ==
        "cell,label,fold_0,fold_1,mean_rmsd,failed,selected\n0,a,1,2,1.5,0,0\n1,b,1,1,1,0,1\n");
}

}  // TEST_SUITE
