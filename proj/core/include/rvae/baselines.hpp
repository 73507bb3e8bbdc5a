#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rvae/cohort.hpp"
#include "rvae/forest.hpp"
#include "rvae/lasso.hpp"
#include "rvae/metrics.hpp"
#include "rvae/standardize.hpp"
#include "rvae/training.hpp"

namespace rvae {

/// Raw biomarker rows of the selected subjects.
Matrix feature_matrix(const Cohort& cohort, std::span<const std::size_t> indices);
/// Same rows z-scored with `scaler`.
Matrix feature_matrix(const Cohort& cohort, std::span<const std::size_t> indices, const FeatureScaler& scaler);
std::vector<double> sbp_targets(const Cohort& cohort, std::span<const std::size_t> indices);

struct LassoRegressor {
  FeatureScaler scaler;
  LassoModel model;

  double predict(const BiomarkerVector& x) const;
};

struct ForestRegressor {
  ForestModel model;

  double predict(const BiomarkerVector& x) const;
};

LassoRegressor fit_lasso_regressor(const Cohort& cohort, std::span<const std::size_t> train, double lambda,
                                   const LassoOptions& options = {});
ForestRegressor fit_forest_regressor(const Cohort& cohort, std::span<const std::size_t> train,
                                     const ForestParams& params, std::size_t threads = 0);

struct BaselineGrid {
  std::vector<double> lambda = {0.01, 0.03, 0.1, 0.3, 1.0, 3.0};
  std::vector<std::size_t> max_depth = {8, 12};
  std::vector<std::size_t> min_leaf = {5, 10};
  ForestParams forest;  // n_trees, features_per_split, seed shared by every cell

  std::vector<ForestParams> forest_cells() const;
};

/// Same fold layout as the R-VAE grid search for a given (pool, seed).
GridResult lasso_grid_search(const Cohort& cohort, std::span<const std::size_t> pool,
                             std::span<const double> lambdas, std::size_t k, std::uint64_t seed);
GridResult forest_grid_search(const Cohort& cohort, std::span<const std::size_t> pool,
                              std::span<const ForestParams> cells, std::size_t k, std::uint64_t seed,
                              std::size_t threads = 0);

// --- comparison report ---------------------------------------------------------

using SbpPredictor = std::function<double(const Subject&)>;

struct NamedPredictor {
  std::string name;
  SbpPredictor predict;
};

struct ComparisonRow {
  std::string model;
  EvalMetrics metrics;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  NrmsdNormalizer normalizer = NrmsdNormalizer::Range;
  std::size_t n_test = 0;
};

/// Scores every predictor on the same test subjects.
ComparisonReport compare(std::span<const NamedPredictor> models, const Cohort& cohort,
                         std::span<const std::size_t> test, NrmsdNormalizer normalizer = NrmsdNormalizer::Range);

/// Fixed-width text table: one row per model, columns RMSD, nRMSD, R2.
std::string format_table(const ComparisonReport& report);
nlohmann::ordered_json to_json(const ComparisonReport& report);
std::string to_csv(const ComparisonReport& report);

nlohmann::ordered_json to_json(const EvalMetrics& metrics);
/// One row per cell: cell, label, fold_0..fold_k-1, mean_rmsd, failed, selected.
std::string grid_to_csv(const GridResult& result, const std::vector<std::string>& cell_labels);

}  // namespace rvae
