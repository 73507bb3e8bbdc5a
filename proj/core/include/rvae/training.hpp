#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rvae/adam.hpp"
#include "rvae/cohort.hpp"
#include "rvae/metrics.hpp"
#include "rvae/model.hpp"
#include "rvae/splits.hpp"

namespace rvae {

// How the regression head is initialised between the two stages.
// Intercept: w = 0 and b = mean training SBP, so the head grows from zero
// together with the latent spread. LeastSquares: fit w, b on the stage-1
// latent means. None: keep the stage-1 weights.
enum class WarmStart { None, Intercept, LeastSquares };

std::string_view to_string(WarmStart w);
WarmStart warm_start_from_string(std::string_view s);

struct TrainConfig {
  double alpha = 0.3;
  double beta_stage2 = 2.0;
  std::size_t epochs_stage1 = 200;
  std::size_t epochs_stage2 = 300;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  std::uint64_t seed = 42;
  RegressionLoss regression;
  std::size_t patience = 30;  // epochs without validation improvement; 0 disables
  double dropout = 0.3;
  RegressionForm form = RegressionForm::Broadcast;
  DummyEncoding dummy;
  WarmStart warm_start = WarmStart::Intercept;
  // Learning-rate multiplier for the regression head, whose weights are in
  // mmHg per latent unit. 0 = the population std of the training SBP.
  double regressor_lr_scale = 0.0;
  std::size_t folds = 5;
  NrmsdNormalizer nrmsd = NrmsdNormalizer::Range;

  RVaeHyperparams hyperparams() const;
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

struct EpochRecord {
  int stage = 1;
  std::size_t epoch = 0;  // 1-based within its stage
  LossBreakdown train;
  LossBreakdown validation;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch_stage1 = 0;
  std::size_t best_epoch_stage2 = 0;
  std::uint64_t optimizer_steps = 0;
};

/// Thrown when a loss or gradient stops being finite. Carries the weights
/// of the last completed epoch with a finite loss.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(const std::string& what, RVaeModel last_good, TrainHistory history)
      : NumericError(what), last_good_(std::move(last_good)), history_(std::move(history)) {}
  const RVaeModel& last_good() const { return last_good_; }
  const TrainHistory& history() const { return history_; }

 private:
  RVaeModel last_good_;
  TrainHistory history_;
};

/// Model-space view of a set of subjects.
Batch make_batch(const Cohort& cohort, std::span<const std::size_t> indices, const FeatureScaler& scaler,
                 const DummyEncoding& dummy);

/// Stage 1 minimizes recon + alpha*KL (beta = 0); stage 2 the full joint
/// loss with beta = beta_stage2. Each stage keeps the weights with the lowest
/// validation total loss and stops after `patience` epochs without
/// improvement. `model` must be initialized; `rng` drives shuffling and
/// training noise.
TrainHistory train_two_stage(RVaeModel& model, const Batch& train, const Batch& validation,
                             const TrainConfig& config, Rng& rng);

struct FitResult {
  RVaeModel model;
  TrainHistory history;
};

/// Fits the scaler on `train_idx`, initializes and trains a model, then
/// records per-group latent anchors from the training subjects.
FitResult fit_rvae(const Cohort& cohort, std::span<const std::size_t> train_idx,
                   std::span<const std::size_t> val_idx, const TrainConfig& config);

/// Eval-mode SBP predictions (z = mu) for raw-unit subjects.
std::vector<double> predict_subjects(const RVaeModel& model, const Cohort& cohort,
                                     std::span<const std::size_t> indices);

EvalMetrics evaluate(const RVaeModel& model, const Cohort& cohort, std::span<const std::size_t> indices,
                     NrmsdNormalizer normalizer = NrmsdNormalizer::Range);

/// Per-group centroid of the eval-mode latent means and their least-squares
/// direction of travel against the model's predicted SBP. A group with no
/// spread in predicted SBP gets the minimum-norm direction w / |w|^2.
std::array<GroupLatentPath, 2> latent_paths(const RVaeModel& model, const Batch& batch);

// --- grid search ------------------------------------------------------------------

struct GridCellScore {
  std::size_t cell = 0;
  std::vector<double> fold_rmsd;
  double mean_rmsd = std::numeric_limits<double>::infinity();
  bool failed = false;  // some fold threw (e.g. diverged); mean is +inf
  std::string failure;
};

struct GridResult {
  std::size_t best = 0;
  std::vector<GridCellScore> cells;
};

/// Exhaustive k-fold evaluation. `score(cell, fold)` returns the validation
/// RMSD of that cell on that fold; exceptions mark the cell as failed. The
/// best cell has the lowest mean RMSD, ties going to the lower index.
GridResult grid_search(std::size_t n_cells, std::size_t k,
                       const std::function<double(std::size_t cell, std::size_t fold)>& score,
                       std::size_t threads = 0);

struct RVaeGrid {
  std::vector<double> lr = {1e-3, 3e-4};
  std::vector<std::size_t> batch_size = {32, 64};
  std::vector<double> huber_delta = {5.0, 9.0, 15.0};

  std::vector<TrainConfig> expand(const TrainConfig& base) const;
};

/// Cross-validated R-VAE grid search over `pool` (typically the development
/// split). Each fold trains on the other folds and scores RMSD on the held
/// out one, which also serves as the early-stopping monitor.
GridResult rvae_grid_search(const Cohort& cohort, std::span<const std::size_t> pool,
                            std::span<const TrainConfig> cells, std::size_t k, std::uint64_t seed,
                            std::size_t threads = 0);

}  // namespace rvae
