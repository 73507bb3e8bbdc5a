#include "rvae/training.hpp"

#include <cmath>
#include <numeric>

#include "rvae/error.hpp"
#include "rvae/parallel.hpp"

namespace rvae {

std::string_view to_string(WarmStart w) {
  switch (w) {
    case WarmStart::None: return "none";
    case WarmStart::Intercept: return "intercept";
    case WarmStart::LeastSquares: return "least_squares";
  }
  return "none";
}

WarmStart warm_start_from_string(std::string_view s) {
  if (s == "none") return WarmStart::None;
  if (s == "intercept") return WarmStart::Intercept;
  if (s == "least_squares") return WarmStart::LeastSquares;
  throw ConfigError("unknown warm start mode '" + std::string(s) + "'");
}

RVaeHyperparams TrainConfig::hyperparams() const {
  RVaeHyperparams hp;
  hp.alpha = alpha;
  hp.beta = beta_stage2;
  hp.dropout = dropout;
  hp.regression = regression;
  hp.form = form;
  hp.dummy = dummy;
  return hp;
}

void TrainConfig::validate() const {
  auto fail = [](const char* field, const char* why) {
    throw ConfigError(std::string("train config '") + field + "': " + why);
  };
  if (!(alpha >= 0.0)) fail("alpha", "must be non-negative");
  if (!(beta_stage2 >= 0.0)) fail("beta_stage2", "must be non-negative");
  if (epochs_stage1 < 1) fail("epochs_stage1", "must be at least 1");
  if (epochs_stage2 < 1) fail("epochs_stage2", "must be at least 1");
  if (batch_size < 1) fail("batch_size", "must be at least 1");
  if (!(lr > 0.0)) fail("lr", "must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout", "must lie in [0, 1)");
  if (regression.kind == RegressionLossKind::Huber && !(regression.delta > 0.0)) {
    fail("huber_delta", "must be positive");
  }
  if (folds < 3) fail("folds", "must be at least 3");
  if (!(regressor_lr_scale >= 0.0) || !std::isfinite(regressor_lr_scale)) {
    fail("regressor_lr_scale", "must be non-negative");
  }
}

Batch make_batch(const Cohort& cohort, std::span<const std::size_t> indices, const FeatureScaler& scaler,
                 const DummyEncoding& dummy) {
  Batch b;
  b.x = Matrix(indices.size(), kBiomarkerCount);
  b.y.resize(indices.size());
  b.dummy.resize(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const Subject& s = cohort.at(indices[r]);
    const BiomarkerVector z = scaler.apply(s.biomarkers);
    for (std::size_t f = 0; f < kBiomarkerCount; ++f) b.x(r, f) = z[f];
    b.y[r] = s.sbp_mmhg;
    b.dummy[r] = dummy.value(s.gender);
  }
  return b;
}

namespace {

Batch gather(const Batch& src, std::span<const std::size_t> rows) {
  Batch b;
  b.x = Matrix(rows.size(), src.x.cols());
  b.y.resize(rows.size());
  b.dummy.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto from = src.x.row_span(rows[r]);
    std::copy(from.begin(), from.end(), b.x.row_span(r).begin());
    b.y[r] = src.y[rows[r]];
    b.dummy[r] = src.dummy[rows[r]];
  }
  return b;
}

bool finite(const LossBreakdown& l) {
  return std::isfinite(l.recon) && std::isfinite(l.kl) && std::isfinite(l.regression) && std::isfinite(l.total);
}

std::vector<Latent> latent_means(const RVaeModel& model, const Batch& batch) {
  std::vector<Latent> mus(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) mus[i] = model.encode(batch.x.row_span(i)).mu;
  return mus;
}

void intercept_start_regressor(RVaeModel& model, const Batch& train) {
  Regressor& reg = model.regressor();
  reg = Regressor{};
  reg.b = std::accumulate(train.y.begin(), train.y.end(), 0.0) / static_cast<double>(train.size());
}

void least_squares_start_regressor(RVaeModel& model, const Batch& train) {
  const std::vector<Latent> mus = latent_means(model, train);
  const bool separate = model.hyperparams().form == RegressionForm::SeparateDummy;
  const std::size_t p = separate ? 4 : 3;
  Matrix normal(p, p);
  std::vector<double> rhs(p, 0.0);
  std::vector<double> row(p);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const double d = train.dummy[i];
    if (separate) {
      row = {mus[i][0], mus[i][1], d, 1.0};
    } else {
      row = {mus[i][0] + d, mus[i][1] + d, 1.0};
    }
    for (std::size_t a = 0; a < p; ++a) {
      rhs[a] += row[a] * train.y[i];
      for (std::size_t c = 0; c < p; ++c) normal(a, c) += row[a] * row[c];
    }
  }
  Regressor& reg = model.regressor();
  try {
    const std::vector<double> coef = solve_linear(normal, rhs);
    reg.w = {coef[0], coef[1]};
    if (separate) {
      reg.w_dummy = coef[2];
      reg.b = coef[3];
    } else {
      reg.b = coef[2];
    }
  } catch (const NumericError&) {
    // Collapsed latent space: fall back to the intercept-only predictor.
    reg = Regressor{};
    reg.b = std::accumulate(train.y.begin(), train.y.end(), 0.0) / static_cast<double>(train.size());
  }
}

}  // namespace

TrainHistory train_two_stage(RVaeModel& model, const Batch& train, const Batch& validation,
                             const TrainConfig& config, Rng& rng) {
  config.validate();
  if (train.size() == 0 || validation.size() == 0) throw ValidationError("train_two_stage: empty split");
  TrainHistory history;
  const NoiseFrame val_noise = RVaeModel::frozen_eval_noise(validation.size());
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad;

  double head_scale = config.regressor_lr_scale;
  if (head_scale == 0.0) {
    const double n = static_cast<double>(train.size());
    const double mean = std::accumulate(train.y.begin(), train.y.end(), 0.0) / n;
    double ss = 0.0;
    for (double y : train.y) ss += (y - mean) * (y - mean);
    head_scale = std::sqrt(ss / n);
    if (!(head_scale > 0.0)) head_scale = 1.0;
  }
  std::vector<double> lr_scale(model.parameter_count(), 1.0);
  for (std::size_t i = lr_scale.size() - kRegressorParameterCount; i < lr_scale.size(); ++i) lr_scale[i] = head_scale;

  auto run_stage = [&](int stage, double beta, std::size_t epochs) {
    AdamConfig adam_cfg;
    adam_cfg.lr = config.lr;
    AdamState adam(model.parameter_count(), adam_cfg);
    adam.set_lr_scale(lr_scale);
    std::vector<double> params = model.flat_parameters();
    std::vector<double> best_params = params;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t best_epoch = 0;
    std::size_t since_best = 0;
    RVaeModel last_good = model;

    auto diverged = [&](const std::string& where) {
      throw TrainingDiverged("training diverged in stage " + std::to_string(stage) + " " + where +
                                 " (lr " + std::to_string(config.lr) + ")",
                             last_good, history);
    };

    for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
      rng.shuffle(order);
      LossBreakdown sum;
      for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
        const std::size_t stop = std::min(order.size(), start + config.batch_size);
        const Batch mb = gather(train, std::span(order).subspan(start, stop - start));
        const NoiseFrame noise = model.sample_noise(mb.size(), Mode::Train, rng);
        const LossBreakdown l = model.loss(mb, noise, config.alpha, beta, &grad);
        if (!finite(l)) diverged("at epoch " + std::to_string(epoch) + ": non-finite training loss");
        try {
          adam.update(params, grad);
        } catch (const NumericError& e) {
          diverged("at epoch " + std::to_string(epoch) + ": " + e.what());
        }
        model.set_flat_parameters(params);
        const auto w = static_cast<double>(mb.size());
        sum.recon += w * l.recon;
        sum.kl += w * l.kl;
        sum.regression += w * l.regression;
        sum.total += w * l.total;
      }
      const auto n = static_cast<double>(train.size());
      EpochRecord rec;
      rec.stage = stage;
      rec.epoch = epoch;
      rec.train = {sum.recon / n, sum.kl / n, sum.regression / n, sum.total / n};
      rec.validation = model.loss(validation, val_noise, config.alpha, beta);
      if (!finite(rec.validation)) diverged("at epoch " + std::to_string(epoch) + ": non-finite validation loss");
      history.epochs.push_back(rec);
      last_good = model;

      if (rec.validation.total < best_val) {
        best_val = rec.validation.total;
        best_params = params;
        best_epoch = epoch;
        since_best = 0;
      } else if (config.patience > 0 && ++since_best >= config.patience) {
        break;
      }
    }
    model.set_flat_parameters(best_params);
    history.optimizer_steps += adam.step();
    return best_epoch;
  };

  history.best_epoch_stage1 = run_stage(1, 0.0, config.epochs_stage1);
  if (config.warm_start == WarmStart::Intercept) intercept_start_regressor(model, train);
  if (config.warm_start == WarmStart::LeastSquares) least_squares_start_regressor(model, train);
  history.best_epoch_stage2 = run_stage(2, config.beta_stage2, config.epochs_stage2);
  return history;
}

std::array<GroupLatentPath, 2> latent_paths(const RVaeModel& model, const Batch& batch) {
  const std::vector<Latent> mus = latent_means(model, batch);
  const Latent& w = model.regressor().w;
  const double w2 = w[0] * w[0] + w[1] * w[1];
  std::array<GroupLatentPath, 2> out{};
  for (std::size_t g = 0; g < 2; ++g) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if ((batch.dummy[i] != 0.0 ? 1u : 0u) == g) members.push_back(i);
    }
    if (members.empty()) {
      for (std::size_t i = 0; i < batch.size(); ++i) members.push_back(i);
    }
    const auto n = static_cast<double>(members.size());
    Latent c{};
    double ybar = 0.0;
    std::vector<double> yhat;
    for (std::size_t i : members) {
      yhat.push_back(model.predict_sbp(mus[i], batch.dummy[i]));
      ybar += yhat.back();
      for (std::size_t j = 0; j < kLatentDim; ++j) c[j] += mus[i][j];
    }
    ybar /= n;
    for (double& v : c) v /= n;
    double syy = 0.0;
    Latent szy{};
    for (std::size_t k = 0; k < members.size(); ++k) {
      const double dy = yhat[k] - ybar;
      syy += dy * dy;
      for (std::size_t j = 0; j < kLatentDim; ++j) szy[j] += (mus[members[k]][j] - c[j]) * dy;
    }
    Latent v{};
    if (w2 > 0.0) v = {w[0] / w2, w[1] / w2};
    if (syy > 0.0) {
      const Latent cand{szy[0] / syy, szy[1] / syy};
      const double wv = w[0] * cand[0] + w[1] * cand[1];
      // w . cand is 1 up to rounding; renormalize so that moving along the
      // path changes the prediction by exactly one mmHg per unit.
      if (std::abs(wv) > 1e-12) v = {cand[0] / wv, cand[1] / wv};
    }
    out[g] = {c, v};
  }
  return out;
}

FitResult fit_rvae(const Cohort& cohort, std::span<const std::size_t> train_idx,
                   std::span<const std::size_t> val_idx, const TrainConfig& config) {
  config.validate();
  std::vector<BiomarkerVector> rows;
  rows.reserve(train_idx.size());
  for (std::size_t i : train_idx) rows.push_back(cohort.at(i).biomarkers);
  const FeatureScaler scaler = FeatureScaler::fit(rows);

  const Batch train = make_batch(cohort, train_idx, scaler, config.dummy);
  const Batch val = make_batch(cohort, val_idx, scaler, config.dummy);

  FitResult result{RVaeModel(config.hyperparams()), {}};
  Rng init_rng = Rng::derive(config.seed, {1});
  Rng train_rng = Rng::derive(config.seed, {2});
  result.model.initialize(init_rng);
  result.history = train_two_stage(result.model, train, val, config, train_rng);
  result.model.scaler = scaler;
  result.model.training_seed = config.seed;
  result.model.latent_paths = latent_paths(result.model, train);
  return result;
}

std::vector<double> predict_subjects(const RVaeModel& model, const Cohort& cohort,
                                     std::span<const std::size_t> indices) {
  std::vector<double> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    const Subject& s = cohort.at(i);
    const BiomarkerVector x = model.scaler.apply(s.biomarkers);
    const LatentCode code = model.encode(x.values);
    out.push_back(model.predict_sbp(code.mu, model.hyperparams().dummy.value(s.gender)));
  }
  return out;
}

EvalMetrics evaluate(const RVaeModel& model, const Cohort& cohort, std::span<const std::size_t> indices,
                     NrmsdNormalizer normalizer) {
  std::vector<double> truth;
  truth.reserve(indices.size());
  for (std::size_t i : indices) truth.push_back(cohort.at(i).sbp_mmhg);
  return compute_metrics(truth, predict_subjects(model, cohort, indices), normalizer);
}

// --- grid search ------------------------------------------------------------------

GridResult grid_search(std::size_t n_cells, std::size_t k,
                       const std::function<double(std::size_t, std::size_t)>& score, std::size_t threads) {
  if (n_cells == 0) throw ConfigError("grid_search: empty grid");
  if (k == 0) throw ConfigError("grid_search: k must be positive");
  GridResult result;
  result.cells.resize(n_cells);
  std::vector<std::string> failures(n_cells * k);
  std::vector<double> rmsd(n_cells * k, std::numeric_limits<double>::infinity());
  parallel_for(
      n_cells * k,
      [&](std::size_t job) {
        const std::size_t cell = job / k;
        const std::size_t fold = job % k;
        try {
          const double v = score(cell, fold);
          rmsd[job] = std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
          if (!std::isfinite(v)) failures[job] = "non-finite score";
        } catch (const std::exception& e) {
          failures[job] = e.what();
        }
      },
      threads);
  for (std::size_t c = 0; c < n_cells; ++c) {
    GridCellScore& s = result.cells[c];
    s.cell = c;
    double sum = 0.0;
    for (std::size_t f = 0; f < k; ++f) {
      s.fold_rmsd.push_back(rmsd[c * k + f]);
      sum += rmsd[c * k + f];
      if (!failures[c * k + f].empty() && !s.failed) {
        s.failed = true;
        s.failure = "fold " + std::to_string(f) + ": " + failures[c * k + f];
      }
    }
    s.mean_rmsd = s.failed ? std::numeric_limits<double>::infinity() : sum / static_cast<double>(k);
  }
  for (std::size_t c = 1; c < n_cells; ++c) {
    if (result.cells[c].mean_rmsd < result.cells[result.best].mean_rmsd) result.best = c;
  }
  return result;
}

std::vector<TrainConfig> RVaeGrid::expand(const TrainConfig& base) const {
  std::vector<TrainConfig> cells;
  for (double lr_v : lr) {
    for (std::size_t bs : batch_size) {
      for (double delta : huber_delta) {
        TrainConfig c = base;
        c.lr = lr_v;
        c.batch_size = bs;
        c.regression.delta = delta;
        cells.push_back(c);
      }
    }
  }
  return cells;
}

GridResult rvae_grid_search(const Cohort& cohort, std::span<const std::size_t> pool,
                            std::span<const TrainConfig> cells, std::size_t k, std::uint64_t seed,
                            std::size_t threads) {
  const auto folds = assign_folds(cohort, pool, k, Rng::derive_seed(seed, {0xCF}));
  return grid_search(
      cells.size(), k,
      [&](std::size_t cell, std::size_t fold) {
        TrainConfig cfg = cells[cell];
        cfg.seed = Rng::derive_seed(seed, {cell, fold});
        const std::vector<std::size_t> train = merge_except(folds, fold);
        const FitResult fit = fit_rvae(cohort, train, folds[fold], cfg);
        return evaluate(fit.model, cohort, folds[fold], cfg.nrmsd).rmsd;
      },
      threads);
}

}  // namespace rvae
