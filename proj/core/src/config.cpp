#include "rvae/config.hpp"

#include <fstream>
#include <sstream>

#include "rvae/error.hpp"
#include "rvae/keyvalue.hpp"

namespace rvae {

namespace {

std::vector<std::size_t> size_list(const KeyValueFile& kv, const std::string& key) {
  std::vector<std::size_t> out;
  for (auto v : kv.get_int_list(key)) {
    if (v < 0) throw ConfigError("config key '" + key + "': values must be non-negative");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw ConfigError("config key '" + key + "': list is empty");
  return out;
}

std::vector<double> double_list(const KeyValueFile& kv, const std::string& key) {
  auto v = kv.get_double_list(key);
  if (v.empty()) throw ConfigError("config key '" + key + "': list is empty");
  return v;
}

template <class F>
auto keyed(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (what.find(key) != std::string::npos) throw;
    throw ConfigError("config key '" + key + "': " + what);
  }
}

}  // namespace

void RunConfig::validate() const {
  train.validate();
  traversal.validate();
  if (grid.lr.empty() || grid.batch_size.empty() || grid.huber_delta.empty()) {
    throw ConfigError("config: grid lists must be nonempty");
  }
  for (double l : baselines.lambda) {
    if (!(l >= 0.0)) throw ConfigError("config key 'lasso.lambda': values must be non-negative");
  }
  if (baselines.forest.n_trees == 0) throw ConfigError("config key 'forest.n_trees': must be positive");
  for (std::size_t m : baselines.min_leaf) {
    if (m == 0) throw ConfigError("config key 'forest.min_leaf': values must be positive");
  }
  if (!(decomposition.epsilon >= 0.0)) throw ConfigError("config key 'decomposition.epsilon': must be >= 0");
}

RunConfig parse_run_config(std::string_view text, RunConfig c) {
  const KeyValueFile kv = KeyValueFile::parse(text);
  for (const auto& [key, value] : kv.entries()) {
    keyed(key, [&, &key = key] {
      TrainConfig& t = c.train;
      if (key == "alpha") t.alpha = kv.get_double(key);
      else if (key == "beta_stage2") t.beta_stage2 = kv.get_double(key);
      else if (key == "epochs_stage1") t.epochs_stage1 = kv.get_uint(key);
      else if (key == "epochs_stage2") t.epochs_stage2 = kv.get_uint(key);
      else if (key == "batch_size") t.batch_size = kv.get_uint(key);
      else if (key == "lr") t.lr = kv.get_double(key);
      else if (key == "patience") t.patience = kv.get_uint(key);
      else if (key == "dropout") t.dropout = kv.get_double(key);
      else if (key == "regression_loss") t.regression.kind = regression_loss_from_string(kv.get_string(key));
      else if (key == "huber_delta") t.regression.delta = kv.get_double(key);
      else if (key == "regression_form") t.form = regression_form_from_string(kv.get_string(key));
      else if (key == "dummy_female") t.dummy.female = static_cast<int>(kv.get_int(key));
      else if (key == "dummy_male") t.dummy.male = static_cast<int>(kv.get_int(key));
      else if (key == "warm_start") t.warm_start = warm_start_from_string(kv.get_string(key));
      else if (key == "regressor_lr_scale") t.regressor_lr_scale = kv.get_double(key);
      else if (key == "folds") t.folds = kv.get_uint(key);
      else if (key == "nrmsd_normalizer") t.nrmsd = nrmsd_normalizer_from_string(kv.get_string(key));
      else if (key == "grid_search") c.grid_search = kv.get_bool(key);
      else if (key == "grid.lr") c.grid.lr = double_list(kv, key);
      else if (key == "grid.batch_size") c.grid.batch_size = size_list(kv, key);
      else if (key == "grid.huber_delta") c.grid.huber_delta = double_list(kv, key);
      else if (key == "lasso.lambda") c.baselines.lambda = double_list(kv, key);
      else if (key == "forest.n_trees") c.baselines.forest.n_trees = kv.get_uint(key);
      else if (key == "forest.features_per_split") c.baselines.forest.features_per_split = kv.get_uint(key);
      else if (key == "forest.max_depth") c.baselines.max_depth = size_list(kv, key);
      else if (key == "forest.min_leaf") c.baselines.min_leaf = size_list(kv, key);
      else if (key == "traversal.sigma_perp") c.traversal.sigma_perp = kv.get_double(key);
      else if (key == "traversal.samples") c.traversal.samples = kv.get_uint(key);
      else if (key == "traversal.symmetric") c.traversal.symmetric = kv.get_bool(key);
      else if (key == "traversal.sbp_first") c.traversal.sbp_first = kv.get_double(key);
      else if (key == "traversal.sbp_last") c.traversal.sbp_last = kv.get_double(key);
      else if (key == "traversal.sbp_step") c.traversal.sbp_step = kv.get_double(key);
      else if (key == "traversal_anchor") {
        c.traversal.anchor = traversal_anchor_from_string(kv.get_string(key));
        c.decomposition.anchor = c.traversal.anchor;
      } else if (key == "decomposition.epsilon") c.decomposition.epsilon = kv.get_double(key);
      else if (key == "threads") c.threads = kv.get_uint(key);
      else if (key == "seed") c.seed = kv.get_uint(key);
      else throw ConfigError("unknown config key '" + key + "'");
      return 0;
    });
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), std::move(base));
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  const TrainConfig& t = c.train;
  nlohmann::ordered_json j;
  j["alpha"] = t.alpha;
  j["beta_stage2"] = t.beta_stage2;
  j["epochs_stage1"] = t.epochs_stage1;
  j["epochs_stage2"] = t.epochs_stage2;
  j["batch_size"] = t.batch_size;
  j["lr"] = t.lr;
  j["patience"] = t.patience;
  j["dropout"] = t.dropout;
  j["regression_loss"] = std::string(to_string(t.regression.kind));
  j["huber_delta"] = t.regression.delta;
  j["regression_form"] = std::string(to_string(t.form));
  j["dummy_female"] = t.dummy.female;
  j["dummy_male"] = t.dummy.male;
  j["warm_start"] = std::string(to_string(t.warm_start));
  j["regressor_lr_scale"] = t.regressor_lr_scale;
  j["folds"] = t.folds;
  j["nrmsd_normalizer"] = std::string(to_string(t.nrmsd));
  j["grid_search"] = c.grid_search;
  j["grid.lr"] = c.grid.lr;
  j["grid.batch_size"] = c.grid.batch_size;
  j["grid.huber_delta"] = c.grid.huber_delta;
  j["lasso.lambda"] = c.baselines.lambda;
  j["forest.n_trees"] = c.baselines.forest.n_trees;
  j["forest.features_per_split"] = c.baselines.forest.features_per_split;
  j["forest.max_depth"] = c.baselines.max_depth;
  j["forest.min_leaf"] = c.baselines.min_leaf;
  j["traversal.sigma_perp"] = c.traversal.sigma_perp;
  j["traversal.samples"] = c.traversal.samples;
  j["traversal.symmetric"] = c.traversal.symmetric;
  j["traversal.sbp_first"] = c.traversal.sbp_first;
  j["traversal.sbp_last"] = c.traversal.sbp_last;
  j["traversal.sbp_step"] = c.traversal.sbp_step;
  j["traversal_anchor"] = std::string(to_string(c.traversal.anchor));
  j["decomposition.epsilon"] = c.decomposition.epsilon;
  j["threads"] = c.threads;
  return j;
}

}  // namespace rvae
