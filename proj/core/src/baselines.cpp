#include "rvae/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "rvae/csv.hpp"
#include "rvae/error.hpp"
#include "rvae/rng.hpp"
#include "rvae/splits.hpp"

namespace rvae {

Matrix feature_matrix(const Cohort& cohort, std::span<const std::size_t> indices) {
  Matrix x(indices.size(), kBiomarkerCount);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto& v = cohort.at(indices[r]).biomarkers.values;
    for (std::size_t c = 0; c < kBiomarkerCount; ++c) x(r, c) = v[c];
  }
  return x;
}

Matrix feature_matrix(const Cohort& cohort, std::span<const std::size_t> indices, const FeatureScaler& scaler) {
  Matrix x(indices.size(), kBiomarkerCount);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto z = scaler.apply(cohort.at(indices[r]).biomarkers);
    for (std::size_t c = 0; c < kBiomarkerCount; ++c) x(r, c) = z[c];
  }
  return x;
}

std::vector<double> sbp_targets(const Cohort& cohort, std::span<const std::size_t> indices) {
  std::vector<double> y;
  y.reserve(indices.size());
  for (std::size_t i : indices) y.push_back(cohort.at(i).sbp_mmhg);
  return y;
}

namespace {

FeatureScaler fit_scaler(const Cohort& cohort, std::span<const std::size_t> train) {
  std::vector<BiomarkerVector> rows;
  rows.reserve(train.size());
  for (std::size_t i : train) rows.push_back(cohort.at(i).biomarkers);
  return FeatureScaler::fit(rows);
}

double rmsd_on(const Cohort& cohort, std::span<const std::size_t> idx,
               const std::function<double(const BiomarkerVector&)>& f) {
  double ss = 0.0;
  for (std::size_t i : idx) {
    const double r = cohort.at(i).sbp_mmhg - f(cohort.at(i).biomarkers);
    ss += r * r;
  }
  return std::sqrt(ss / static_cast<double>(idx.size()));
}

}  // namespace

double LassoRegressor::predict(const BiomarkerVector& x) const {
  const auto z = scaler.apply(x);
  return model.predict(z.values);
}

double ForestRegressor::predict(const BiomarkerVector& x) const { return model.predict(x.values); }

LassoRegressor fit_lasso_regressor(const Cohort& cohort, std::span<const std::size_t> train, double lambda,
                                   const LassoOptions& options) {
  LassoRegressor r;
  r.scaler = fit_scaler(cohort, train);
  const Matrix x = feature_matrix(cohort, train, r.scaler);
  const auto y = sbp_targets(cohort, train);
  r.model = lasso_fit(x, y, lambda, options);
  return r;
}

ForestRegressor fit_forest_regressor(const Cohort& cohort, std::span<const std::size_t> train,
                                     const ForestParams& params, std::size_t threads) {
  ForestRegressor r;
  const Matrix x = feature_matrix(cohort, train);
  const auto y = sbp_targets(cohort, train);
  r.model = forest_fit(x, y, params, threads);
  return r;
}

std::vector<ForestParams> BaselineGrid::forest_cells() const {
  std::vector<ForestParams> cells;
  for (std::size_t d : max_depth) {
    for (std::size_t m : min_leaf) {
      ForestParams p = forest;
      p.max_depth = d;
      p.min_leaf = m;
      cells.push_back(p);
    }
  }
  return cells;
}

GridResult lasso_grid_search(const Cohort& cohort, std::span<const std::size_t> pool,
                             std::span<const double> lambdas, std::size_t k, std::uint64_t seed) {
  const auto folds = assign_folds(cohort, pool, k, Rng::derive_seed(seed, {0xCF}));
  return grid_search(
      lambdas.size(), k,
      [&](std::size_t cell, std::size_t fold) {
        const auto train = merge_except(folds, fold);
        const LassoRegressor r = fit_lasso_regressor(cohort, train, lambdas[cell]);
        return rmsd_on(cohort, folds[fold], [&](const BiomarkerVector& x) { return r.predict(x); });
      },
      1);
}

GridResult forest_grid_search(const Cohort& cohort, std::span<const std::size_t> pool,
                              std::span<const ForestParams> cells, std::size_t k, std::uint64_t seed,
                              std::size_t threads) {
  const auto folds = assign_folds(cohort, pool, k, Rng::derive_seed(seed, {0xCF}));
  // Parallelism lives inside each forest; cells run one at a time.
  return grid_search(
      cells.size(), k,
      [&](std::size_t cell, std::size_t fold) {
        ForestParams p = cells[cell];
        p.seed = Rng::derive_seed(seed, {0xF0, cell, fold});
        const auto train = merge_except(folds, fold);
        const ForestRegressor r = fit_forest_regressor(cohort, train, p, threads);
        return rmsd_on(cohort, folds[fold], [&](const BiomarkerVector& x) { return r.predict(x); });
      },
      1);
}

ComparisonReport compare(std::span<const NamedPredictor> models, const Cohort& cohort,
                         std::span<const std::size_t> test, NrmsdNormalizer normalizer) {
  ComparisonReport report;
  report.normalizer = normalizer;
  report.n_test = test.size();
  const auto y = sbp_targets(cohort, test);
  for (const auto& m : models) {
    std::vector<double> pred;
    pred.reserve(test.size());
    for (std::size_t i : test) pred.push_back(m.predict(cohort.at(i)));
    report.rows.push_back({m.name, compute_metrics(y, pred, normalizer)});
  }
  return report;
}

std::string format_table(const ComparisonReport& report) {
  std::ostringstream out;
  int width = 10;
  for (const auto& r : report.rows) width = std::max(width, static_cast<int>(r.model.size()));
  char line[256];
  std::snprintf(line, sizeof line, "%-*s %10s %10s %10s\n", width, "Model", "RMSD", "nRMSD", "R2");
  out << line;
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof line, "%-*s %10.2f %10.3f %10.3f\n", width, r.model.c_str(), r.metrics.rmsd,
                  r.metrics.nrmsd, r.metrics.r2);
    out << line;
  }
  out << "n_test = " << report.n_test << ", nRMSD normalizer = " << to_string(report.normalizer) << '\n';
  return out.str();
}

nlohmann::ordered_json to_json(const EvalMetrics& m) {
  nlohmann::ordered_json j;
  j["rmsd"] = m.rmsd;
  j["nrmsd"] = m.nrmsd;
  j["r2"] = m.r2;
  j["n"] = m.n;
  return j;
}

nlohmann::ordered_json to_json(const ComparisonReport& report) {
  nlohmann::ordered_json j;
  j["nrmsd_normalizer"] = std::string(to_string(report.normalizer));
  j["n_test"] = report.n_test;
  nlohmann::ordered_json models = nlohmann::ordered_json::object();
  for (const auto& r : report.rows) models[r.model] = to_json(r.metrics);
  j["models"] = models;
  return j;
}

std::string to_csv(const ComparisonReport& report) {
  std::string s = "model,rmsd,nrmsd,r2,n\n";
  for (const auto& r : report.rows) {
    s += r.model + ',' + csv::format_double(r.metrics.rmsd) + ',' + csv::format_double(r.metrics.nrmsd) + ',' +
         csv::format_double(r.metrics.r2) + ',' + std::to_string(r.metrics.n) + '\n';
  }
  return s;
}

std::string grid_to_csv(const GridResult& result, const std::vector<std::string>& cell_labels) {
  std::size_t k = 0;
  for (const auto& c : result.cells) k = std::max(k, c.fold_rmsd.size());
  std::string s = "cell,label";
  for (std::size_t f = 0; f < k; ++f) s += ",fold_" + std::to_string(f);
  s += ",mean_rmsd,failed,selected\n";
  for (const auto& c : result.cells) {
    s += std::to_string(c.cell) + ',' + (c.cell < cell_labels.size() ? cell_labels[c.cell] : std::string());
    for (std::size_t f = 0; f < k; ++f) {
      s += ',';
      if (f < c.fold_rmsd.size()) s += csv::format_double(c.fold_rmsd[f]);
    }
    s += ',' + csv::format_double(c.mean_rmsd) + ',' + (c.failed ? "1" : "0") + ',' +
         (c.cell == result.best ? "1" : "0") + '\n';
  }
  return s;
}

}  // namespace rvae
