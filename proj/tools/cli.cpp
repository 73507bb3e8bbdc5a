#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "manifest.hpp"
#include "rvae/analysis.hpp"
#include "rvae/baselines.hpp"
#include "rvae/biomarkers.hpp"
#include "rvae/cohort.hpp"
#include "rvae/config.hpp"
#include "rvae/csv.hpp"
#include "rvae/error.hpp"
#include "rvae/model_io.hpp"
#include "rvae/rng.hpp"
#include "rvae/splits.hpp"
#include "rvae/training.hpp"

namespace fs = std::filesystem;

namespace rvae::cli {

namespace {

constexpr std::uint64_t kDefaultSeed = 42;
// Stream tags for randomness that is not owned by a library call.
constexpr std::uint64_t kTraverseTag = 0x7A;

struct CommonOpts {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 0;
};

void add_common(CLI::App* sub, CommonOpts& o) {
  sub->add_option("--config", o.config, "key = value run config; its keys override flags")->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "master seed; wins over the config file");
  sub->add_option("--threads", o.threads, "worker threads (0 = hardware concurrency)");
}

// Flags form the base, the config file overrides them, --seed overrides both.
RunConfig resolve_config(const CommonOpts& o, RunConfig base, std::uint64_t fallback_seed) {
  base.threads = o.threads;
  RunConfig cfg = o.config.empty() ? base : load_run_config(o.config, base);
  if (o.seed) cfg.seed = *o.seed;
  if (!cfg.seed) cfg.seed = fallback_seed;
  cfg.train.seed = *cfg.seed;
  cfg.validate();
  return cfg;
}

void ensure_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ValidationError("cannot create output directory '" + dir.string() + "'" +
                          (ec ? ": " + ec.message() : ""));
  }
}

Cohort read_cohort(const fs::path& path) {
  if (!fs::exists(path)) throw ValidationError("cohort file '" + path.string() + "' not found");
  CohortLoadResult r = load_cohort(path);
  for (const auto& issue : r.issues) {
    std::cerr << path.string() << ":" << issue.line << ": " << issue.reason
              << (r.fatal ? "" : " (row skipped)") << "\n";
  }
  if (r.fatal) throw ValidationError("cohort file '" + path.string() + "' is unusable");
  if (r.subjects.empty()) throw ValidationError("cohort file '" + path.string() + "' has no valid rows");
  return std::move(r.subjects);
}

RVaeModel read_model(const fs::path& path) {
  if (!fs::exists(path)) throw ValidationError("model file '" + path.string() + "' not found");
  return load_model(path);
}

void write_artifact(RunManifest& m, const fs::path& path, std::string_view text) {
  csv::write_text(path, text);
  m.add_artifact(path);
}

std::string history_csv(const TrainHistory& h) {
  std::ostringstream out;
  out << "stage,epoch,train_recon,train_kl,train_regression,train_total,"
         "val_recon,val_kl,val_regression,val_total\n";
  for (const auto& e : h.epochs) {
    out << e.stage << ',' << e.epoch;
    for (const LossBreakdown* l : {&e.train, &e.validation}) {
      out << ',' << csv::format_double(l->recon) << ',' << csv::format_double(l->kl) << ','
          << csv::format_double(l->regression) << ',' << csv::format_double(l->total);
    }
    out << '\n';
  }
  return out.str();
}

std::string cell_label(const TrainConfig& c) {
  std::ostringstream s;
  s << "lr=" << csv::format_double(c.lr) << ";batch_size=" << c.batch_size
    << ";huber_delta=" << csv::format_double(c.regression.delta);
  return s.str();
}

std::string forest_label(const ForestParams& p) {
  return "max_depth=" + std::to_string(p.max_depth) + ";min_leaf=" + std::to_string(p.min_leaf);
}

// --- generate ----------------------------------------------------------------------

struct GenerateOpts {
  std::string spec;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_subjects;
  std::optional<std::size_t> n_outliers;
};

int cmd_generate(const GenerateOpts& o) {
  CohortSpec base;
  if (o.n_subjects) base.n_subjects = *o.n_subjects;
  if (o.n_outliers) base.n_outliers = *o.n_outliers;
  CohortSpec spec = o.spec.empty() ? base : load_cohort_spec(o.spec, base);
  if (o.seed) spec.seed = *o.seed;
  spec.validate();

  const fs::path out = o.out;
  ensure_out_dir(out);
  const SyntheticCohort syn = generate_synthetic(spec);

  RunManifest m("generate", spec.seed);
  if (!o.spec.empty()) m.add_input(o.spec);
  const std::string truth = ground_truth_json(syn.truth);
  m.set_config(nlohmann::ordered_json::parse(truth));
  write_artifact(m, out / "cohort.csv", format_cohort(syn.subjects));
  write_artifact(m, out / "ground_truth.json", truth);
  m.write(out);

  std::cout << "generated " << syn.subjects.size() << " subjects (" << syn.truth.category_counts[0]
            << " normotensive, " << syn.truth.category_counts[1] << " prehypertensive, "
            << syn.truth.category_counts[2] << " hypertensive, " << syn.truth.outlier_ids.size()
            << " planted outliers) -> " << (out / "cohort.csv").string() << "\n";
  return kExitOk;
}

// --- biomarkers -----------------------------------------------------------------------

struct BiomarkerOpts {
  std::string curves;
  std::string out;
};

constexpr std::string_view kCurveSuffix = ".curve.csv";
constexpr std::string_view kSubjectSuffix = ".subject.csv";

int cmd_biomarkers(const BiomarkerOpts& o) {
  const fs::path dir = o.curves;
  if (!fs::is_directory(dir)) throw ValidationError("curves directory '" + dir.string() + "' not found");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.size() > kCurveSuffix.size() && name.ends_with(kCurveSuffix)) {
      files.push_back(e.path());
    }
  }
  if (files.empty()) throw ValidationError("no input curves in '" + dir.string() + "'");
  std::sort(files.begin(), files.end());

  const fs::path out = o.out;
  const fs::path out_dir = out.has_parent_path() ? out.parent_path() : fs::path(".");
  ensure_out_dir(out_dir);
  RunManifest m("biomarkers", 0);

  std::ostringstream table;
  table << "id,gender,sbp_mmhg";
  for (auto name : kBiomarkerNames) table << ',' << name;
  table << '\n';
  std::ostringstream qc;
  qc << "id,stage,reason\n";
  std::size_t n_ok = 0, n_qc = 0, n_err = 0;

  for (const auto& f : files) {
    const std::string fname = f.filename().string();
    const std::string id = fname.substr(0, fname.size() - kCurveSuffix.size());
    const fs::path sidecar = dir / (id + std::string(kSubjectSuffix));
    try {
      CurvePair pair = read_curve_csv(f);
      m.add_input(f);
      if (!fs::exists(sidecar)) throw ValidationError("missing subject file '" + sidecar.filename().string() + "'");
      const SubjectSidecar side = read_sidecar_csv(sidecar);
      m.add_input(sidecar);
      pair.lv.lv_mass_g = side.lv_mass_g;
      const BiomarkerVector b = extract_biomarkers(pair.lv, pair.rv, side.anthro);
      table << id << ',' << to_string(side.anthro.gender) << ','
            << (side.sbp_mmhg ? csv::format_double(*side.sbp_mmhg) : std::string());
      for (double v : b.values) table << ',' << csv::format_double(v);
      table << '\n';
      ++n_ok;
    } catch (const QcRejection& e) {
      for (const auto& r : e.verdict().reasons) qc << id << ",qc," << r << '\n';
      ++n_qc;
    } catch (const std::runtime_error& e) {
      std::string why = e.what();
      std::replace(why.begin(), why.end(), ',', ';');
      std::replace(why.begin(), why.end(), '\n', ' ');
      qc << id << ",read," << why << '\n';
      std::cerr << f.string() << ": " << e.what() << "\n";
      ++n_err;
    }
  }

  write_artifact(m, out, table.str());
  fs::path qc_path = out;
  qc_path.replace_extension(".qc.csv");
  write_artifact(m, qc_path, qc.str());
  m.note("counts", {{"curves", files.size()}, {"extracted", n_ok}, {"qc_rejected", n_qc}, {"unreadable", n_err}});
  m.write(out_dir);
  std::cout << "extracted " << n_ok << " of " << files.size() << " subjects; " << n_qc
            << " rejected by QC, " << n_err << " unreadable (see " << qc_path.string() << ")\n";
  return kExitOk;
}

// --- train ------------------------------------------------------------------------------

struct TrainOpts {
  CommonOpts common;
  std::string cohort;
  std::string out;
  bool no_grid = false;
};

int cmd_train(const TrainOpts& o) {
  RunConfig base;
  base.grid_search = !o.no_grid;
  const RunConfig cfg = resolve_config(o.common, base, kDefaultSeed);
  const std::uint64_t seed = *cfg.seed;
  const fs::path out = o.out;
  ensure_out_dir(out);
  const Cohort cohort = read_cohort(o.cohort);
  const SplitPlan plan = make_splits(cohort, seed, cfg.train.folds);

  RunManifest m("train", seed);
  m.add_input(o.cohort);
  m.set_config(to_json(cfg));

  TrainConfig chosen = cfg.train;
  if (cfg.grid_search) {
    const std::vector<TrainConfig> cells = cfg.grid.expand(cfg.train);
    const std::vector<std::size_t> pool = plan.development();
    const GridResult grid = rvae_grid_search(cohort, pool, cells, cfg.train.folds, seed, cfg.threads);
    std::vector<std::string> labels;
    for (const auto& c : cells) labels.push_back(cell_label(c));
    write_artifact(m, out / "grid_rvae.csv", grid_to_csv(grid, labels));
    if (grid.cells[grid.best].failed) throw NumericError("every R-VAE grid cell failed");
    chosen = cells[grid.best];
    std::cout << "grid search: best cell " << labels[grid.best] << " (mean CV RMSD "
              << csv::format_double(grid.cells[grid.best].mean_rmsd) << ")\n";
  }
  m.note("selected", {{"lr", chosen.lr}, {"batch_size", chosen.batch_size}, {"huber_delta", chosen.regression.delta}});

  const FitResult fit = fit_rvae(cohort, plan.train, plan.validation, chosen);
  write_artifact(m, out / "model.json", serialize_model(fit.model));
  write_artifact(m, out / "history.csv", history_csv(fit.history));
  m.note("split_sizes", {{"train", plan.train.size()}, {"validation", plan.validation.size()}, {"test", plan.test.size()}});
  m.note("best_epochs", {{"stage1", fit.history.best_epoch_stage1}, {"stage2", fit.history.best_epoch_stage2}});
  m.write(out);

  const EvalMetrics val = evaluate(fit.model, cohort, plan.validation, cfg.train.nrmsd);
  std::cout << "trained R-VAE on " << plan.train.size() << " subjects; validation RMSD "
            << csv::format_double(val.rmsd) << " mmHg -> " << (out / "model.json").string() << "\n";
  return kExitOk;
}

// --- evaluate ---------------------------------------------------------------------------

struct EvalOpts {
  CommonOpts common;
  std::string cohort;
  std::string model;
  std::string out;
};

int cmd_evaluate(const EvalOpts& o) {
  const RVaeModel model = read_model(o.model);
  const RunConfig cfg = resolve_config(o.common, RunConfig{}, model.training_seed);
  const std::uint64_t seed = *cfg.seed;
  const fs::path out = o.out;
  ensure_out_dir(out);
  const Cohort cohort = read_cohort(o.cohort);
  const SplitPlan plan = make_splits(cohort, seed, cfg.train.folds);

  RunManifest m("evaluate", seed);
  m.add_input(o.cohort);
  m.add_input(o.model);
  m.set_config(to_json(cfg));

  const std::vector<NamedPredictor> models = {
      {"R-VAE", [&](const Subject& s) {
         const Cohort one{s};
         const std::vector<std::size_t> idx{0};
         return predict_subjects(model, one, idx)[0];
       }}};
  const ComparisonReport report = compare(models, cohort, plan.test, cfg.train.nrmsd);
  nlohmann::ordered_json j = to_json(report.rows[0].metrics);
  j["model"] = "R-VAE";
  j["split"] = "test";
  j["normalizer"] = std::string(to_string(cfg.train.nrmsd));
  write_artifact(m, out / "metrics.json", j.dump(2) + "\n");
  m.write(out);
  std::cout << format_table(report);
  return kExitOk;
}

// --- baselines --------------------------------------------------------------------------

struct BaselineOpts {
  CommonOpts common;
  std::string cohort;
  std::string model;
  std::string out;
  bool no_grid = false;
};

int cmd_baselines(const BaselineOpts& o) {
  RunConfig base;
  base.grid_search = !o.no_grid;
  std::optional<RVaeModel> model;
  if (!o.model.empty()) model = read_model(o.model);
  const RunConfig cfg = resolve_config(o.common, base, model ? model->training_seed : kDefaultSeed);
  const std::uint64_t seed = *cfg.seed;
  const fs::path out = o.out;
  ensure_out_dir(out);
  const Cohort cohort = read_cohort(o.cohort);
  const SplitPlan plan = make_splits(cohort, seed, cfg.train.folds);

  RunManifest m("baselines", seed);
  m.add_input(o.cohort);
  if (model) m.add_input(o.model);
  m.set_config(to_json(cfg));

  double lambda = cfg.baselines.lambda.front();
  std::vector<ForestParams> forest_cells = cfg.baselines.forest_cells();
  for (auto& p : forest_cells) p.seed = Rng::derive_seed(seed, {0xF1});
  ForestParams forest = forest_cells.front();
  if (cfg.grid_search) {
    const std::vector<std::size_t> pool = plan.development();
    const GridResult lg = lasso_grid_search(cohort, pool, cfg.baselines.lambda, cfg.train.folds, seed);
    std::vector<std::string> labels;
    for (double l : cfg.baselines.lambda) labels.push_back("lambda=" + csv::format_double(l));
    write_artifact(m, out / "grid_lasso.csv", grid_to_csv(lg, labels));
    lambda = cfg.baselines.lambda[lg.best];

    const GridResult fg = forest_grid_search(cohort, pool, forest_cells, cfg.train.folds, seed, cfg.threads);
    labels.clear();
    for (const auto& p : forest_cells) labels.push_back(forest_label(p));
    write_artifact(m, out / "grid_forest.csv", grid_to_csv(fg, labels));
    forest = forest_cells[fg.best];
  }
  m.note("selected", {{"lasso_lambda", lambda}, {"forest_max_depth", forest.max_depth}, {"forest_min_leaf", forest.min_leaf}});

  const LassoRegressor lasso = fit_lasso_regressor(cohort, plan.train, lambda);
  const ForestRegressor rf = fit_forest_regressor(cohort, plan.train, forest, cfg.threads);
  std::vector<NamedPredictor> models;
  if (model) {
    models.push_back({"R-VAE", [&](const Subject& s) {
                        const Cohort one{s};
                        const std::vector<std::size_t> idx{0};
                        return predict_subjects(*model, one, idx)[0];
                      }});
  }
  models.push_back({"Lasso", [&](const Subject& s) { return lasso.predict(s.biomarkers); }});
  models.push_back({"Random forest", [&](const Subject& s) { return rf.predict(s.biomarkers); }});
  const ComparisonReport report = compare(models, cohort, plan.test, cfg.train.nrmsd);
  write_artifact(m, out / "baselines.json", to_json(report).dump(2) + "\n");
  write_artifact(m, out / "baselines.csv", to_csv(report));
  m.write(out);
  std::cout << format_table(report);
  return kExitOk;
}

// --- traverse ---------------------------------------------------------------------------

struct TraverseOpts {
  CommonOpts common;
  std::string model;
  std::string out;
  std::optional<double> sigma_perp;
  std::optional<std::string> anchor;
};

int cmd_traverse(const TraverseOpts& o) {
  const RVaeModel model = read_model(o.model);
  RunConfig base;
  if (o.sigma_perp) base.traversal.sigma_perp = *o.sigma_perp;
  if (o.anchor) base.traversal.anchor = traversal_anchor_from_string(*o.anchor);
  const RunConfig cfg = resolve_config(o.common, base, model.training_seed);
  const std::uint64_t seed = *cfg.seed;
  const fs::path out = o.out;
  ensure_out_dir(out);

  RunManifest m("traverse", seed);
  m.add_input(o.model);
  m.set_config(to_json(cfg));
  Rng rng = Rng::derive(seed, {kTraverseTag});
  const TraversalReport report = traverse(model, rng, cfg.traversal);
  write_artifact(m, out / "traversal.csv", to_csv(report));
  write_artifact(m, out / "traversal.json", to_json(report).dump(2) + "\n");
  m.write(out);

  std::cout << "traversal: " << report.steps.size() << " steps x 2 groups x " << kBiomarkerCount
            << " biomarkers -> " << (out / "traversal.csv").string() << "\n";
  std::cout << "tendency slopes per mmHg (female / male):\n";
  for (std::size_t b = 0; b < kBiomarkerCount; ++b) {
    std::cout << "  " << kBiomarkerNames[b] << ": " << csv::format_double(report.slope[0][b]) << " / "
              << csv::format_double(report.slope[1][b]) << "\n";
  }
  return kExitOk;
}

// --- mispredict -------------------------------------------------------------------------

struct MispredictOpts {
  CommonOpts common;
  std::string cohort;
  std::string model;
  std::string out;
  std::string subset = "all";
  std::optional<std::string> anchor;
};

int cmd_mispredict(const MispredictOpts& o) {
  const RVaeModel model = read_model(o.model);
  RunConfig base;
  if (o.anchor) base.decomposition.anchor = traversal_anchor_from_string(*o.anchor);
  const RunConfig cfg = resolve_config(o.common, base, model.training_seed);
  const std::uint64_t seed = *cfg.seed;
  const fs::path out = o.out;
  ensure_out_dir(out);
  const Cohort cohort = read_cohort(o.cohort);

  RunManifest m("mispredict", seed);
  m.add_input(o.cohort);
  m.add_input(o.model);
  m.set_config(to_json(cfg));

  std::vector<std::size_t> indices;
  if (o.subset == "test") indices = make_splits(cohort, seed, cfg.train.folds).test;
  const MispredictionLists lists = find_mispredicted(model, cohort, indices);
  MispredictionReport report;
  report.anchor = cfg.decomposition.anchor;
  if (lists.predicted_normo.empty() && lists.predicted_hyper.empty()) {
    report.predicted_normo.mean_pct_diff.fill(std::numeric_limits<double>::quiet_NaN());
    report.predicted_hyper.mean_pct_diff.fill(std::numeric_limits<double>::quiet_NaN());
  } else {
    report = misprediction_decomposition(model, cohort, lists, cfg.decomposition);
  }
  write_artifact(m, out / "mispredict.csv", to_csv(report));
  write_artifact(m, out / "mispredict.json", to_json(report).dump(2) + "\n");
  m.note("subset", o.subset);
  m.write(out);
  std::cout << "prehypertensive subjects predicted normotensive: " << lists.predicted_normo.size()
            << ", predicted hypertensive: " << lists.predicted_hyper.size() << " -> "
            << (out / "mispredict.csv").string() << "\n";
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"R-VAE blood-pressure regression toolkit"};
  app.set_version_flag("--version", std::string(RVAE_VERSION));
  app.require_subcommand(1);

  GenerateOpts gen;
  auto* g = app.add_subcommand("generate", "write a synthetic cohort with planted trends");
  g->add_option("--spec", gen.spec, "cohort spec file (key = value)")->check(CLI::ExistingFile);
  g->add_option("--out", gen.out, "output directory")->required();
  g->add_option("--seed", gen.seed, "generator seed; wins over the spec file");
  g->add_option("--n-subjects", gen.n_subjects, "cohort size before outliers");
  g->add_option("--outliers", gen.n_outliers, "planted prehypertensive outliers");

  BiomarkerOpts bio;
  auto* b = app.add_subcommand("biomarkers", "extract biomarkers from <id>.curve.csv + <id>.subject.csv pairs");
  b->add_option("--curves", bio.curves, "directory of curve files")->required();
  b->add_option("--out", bio.out, "biomarker CSV to write")->required();

  TrainOpts tr;
  auto* t = app.add_subcommand("train", "grid-search and fit the R-VAE");
  t->add_option("--cohort", tr.cohort, "cohort CSV")->required();
  t->add_option("--out", tr.out, "output directory")->required();
  t->add_flag("--no-grid-search", tr.no_grid, "train the configured cell only");
  add_common(t, tr.common);

  EvalOpts ev;
  auto* e = app.add_subcommand("evaluate", "score a trained model on the test split");
  e->add_option("--cohort", ev.cohort, "cohort CSV")->required();
  e->add_option("--model", ev.model, "model.json")->required();
  e->add_option("--out", ev.out, "output directory")->required();
  add_common(e, ev.common);

  BaselineOpts bl;
  auto* bs = app.add_subcommand("baselines", "fit Lasso and random forest on the same split");
  bs->add_option("--cohort", bl.cohort, "cohort CSV")->required();
  bs->add_option("--model", bl.model, "optional model.json to include in the table");
  bs->add_option("--out", bl.out, "output directory")->required();
  bs->add_flag("--no-grid-search", bl.no_grid, "use the first grid value of each hyperparameter");
  add_common(bs, bl.common);

  TraverseOpts tv;
  auto* v = app.add_subcommand("traverse", "decode biomarkers along the latent SBP direction");
  v->add_option("--model", tv.model, "model.json")->required();
  v->add_option("--out", tv.out, "output directory")->required();
  v->add_option("--sigma-perp", tv.sigma_perp, "std of perpendicular sampling");
  v->add_option("--anchor", tv.anchor, "group_path, group_centroid or origin");
  add_common(v, tv.common);

  MispredictOpts mp;
  auto* p = app.add_subcommand("mispredict", "decompose mispredicted prehypertensive subjects");
  p->add_option("--cohort", mp.cohort, "cohort CSV")->required();
  p->add_option("--model", mp.model, "model.json")->required();
  p->add_option("--out", mp.out, "output directory")->required();
  p->add_option("--subset", mp.subset, "all or test")->check(CLI::IsMember({"all", "test"}));
  p->add_option("--anchor", mp.anchor, "group_path, group_centroid or origin");
  add_common(p, mp.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (g->parsed()) return cmd_generate(gen);
    if (b->parsed()) return cmd_biomarkers(bio);
    if (t->parsed()) return cmd_train(tr);
    if (e->parsed()) return cmd_evaluate(ev);
    if (bs->parsed()) return cmd_baselines(bl);
    if (v->parsed()) return cmd_traverse(tv);
    if (p->parsed()) return cmd_mispredict(mp);
  } catch (const VersionError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitVersion;
  } catch (const ConfigError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& err) {
    std::cerr << "internal error: " << err.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace rvae::cli
