#include "rvae/model_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "rvae/csv.hpp"
#include "rvae/error.hpp"

namespace rvae {

namespace {

using ojson = nlohmann::ordered_json;

std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

template <class T>
T field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ValidationError(std::string("model JSON: missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("model JSON: field '") + key + "' has the wrong type");
  }
}

}  // namespace

ojson model_to_json(const RVaeModel& model) {
  const RVaeHyperparams& hp = model.hyperparams();
  ojson j;
  j["schema_version"] = kModelSchemaVersion;
  j["kind"] = "rvae";
  j["latent_dim"] = kLatentDim;
  j["hyperparams"] = {{"alpha", hp.alpha},
                      {"beta", hp.beta},
                      {"dropout", hp.dropout},
                      {"regression_loss", std::string(to_string(hp.regression.kind))},
                      {"huber_delta", hp.regression.delta},
                      {"regression_form", std::string(to_string(hp.form))},
                      {"dummy_female", hp.dummy.female},
                      {"dummy_male", hp.dummy.male}};
  ojson layers = ojson::array();
  for (std::size_t i = 0; i < RVaeModel::kLayerCount; ++i) {
    const DenseLayer& l = model.layer(i);
    layers.push_back({{"name", std::string(RVaeModel::kLayerNames[i])},
                      {"in", l.in_dim()},
                      {"out", l.out_dim()},
                      {"activation", std::string(to_string(l.activation()))},
                      {"weights", l.weights().data()},
                      {"bias", l.bias()}});
  }
  j["layers"] = layers;
  const Regressor& r = model.regressor();
  j["regressor"] = {{"w", to_vec(r.w)}, {"b", r.b}, {"w_dummy", r.w_dummy}};
  ojson names = ojson::array();
  for (auto n : kBiomarkerNames) names.push_back(std::string(n));
  j["scaler"] = {{"features", names}, {"mean", to_vec(model.scaler.mean)}, {"std", to_vec(model.scaler.std)}};
  j["training_seed"] = model.training_seed;
  if (model.latent_paths) {
    ojson paths = ojson::array();
    for (const auto& p : *model.latent_paths) {
      paths.push_back({{"centroid", to_vec(p.centroid)}, {"per_mmhg", to_vec(p.per_mmhg)}});
    }
    j["latent_paths"] = paths;
  } else {
    j["latent_paths"] = nullptr;
  }
  return j;
}

RVaeModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("schema_version") || !j["schema_version"].is_number_integer()) {
    throw VersionError("model JSON: missing integer schema_version");
  }
  const int version = j["schema_version"].get<int>();
  if (version != kModelSchemaVersion) {
    throw VersionError("model JSON: schema_version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kModelSchemaVersion) + ")");
  }
  if (field<std::size_t>(j, "latent_dim") != kLatentDim) throw ValidationError("model JSON: latent_dim must be 2");

  const auto& h = j.at("hyperparams");
  RVaeHyperparams hp;
  try {
    hp.alpha = field<double>(h, "alpha");
    hp.beta = field<double>(h, "beta");
    hp.dropout = field<double>(h, "dropout");
    hp.regression.kind = regression_loss_from_string(field<std::string>(h, "regression_loss"));
    hp.regression.delta = field<double>(h, "huber_delta");
    hp.form = regression_form_from_string(field<std::string>(h, "regression_form"));
  } catch (const ConfigError& e) {
    throw ValidationError(std::string("model JSON: ") + e.what());
  }
  hp.dummy.female = field<int>(h, "dummy_female");
  hp.dummy.male = field<int>(h, "dummy_male");

  RVaeModel model;
  try {
    model = RVaeModel(hp);
  } catch (const ConfigError& e) {
    throw ValidationError(std::string("model JSON: ") + e.what());
  }
  const auto& layers = j.at("layers");
  if (!layers.is_array() || layers.size() != RVaeModel::kLayerCount) {
    throw ValidationError("model JSON: expected " + std::to_string(RVaeModel::kLayerCount) + " layers");
  }
  for (std::size_t i = 0; i < RVaeModel::kLayerCount; ++i) {
    DenseLayer& l = model.layer(i);
    const auto& lj = layers[i];
    const auto w = field<std::vector<double>>(lj, "weights");
    const auto b = field<std::vector<double>>(lj, "bias");
    if (field<std::size_t>(lj, "in") != l.in_dim() || field<std::size_t>(lj, "out") != l.out_dim() ||
        w.size() != l.weights().size() || b.size() != l.bias().size()) {
      throw ValidationError("model JSON: layer '" + std::string(RVaeModel::kLayerNames[i]) + "' has wrong shape");
    }
    l.weights().data() = w;
    l.bias() = b;
  }
  const auto& rj = j.at("regressor");
  const auto w = field<std::vector<double>>(rj, "w");
  if (w.size() != kLatentDim) throw ValidationError("model JSON: regressor.w must have 2 entries");
  model.regressor().w = {w[0], w[1]};
  model.regressor().b = field<double>(rj, "b");
  model.regressor().w_dummy = field<double>(rj, "w_dummy");

  const auto& sj = j.at("scaler");
  const auto mean = field<std::vector<double>>(sj, "mean");
  const auto sd = field<std::vector<double>>(sj, "std");
  if (mean.size() != kBiomarkerCount || sd.size() != kBiomarkerCount) {
    throw ValidationError("model JSON: scaler must have 13 means and stds");
  }
  std::copy(mean.begin(), mean.end(), model.scaler.mean.begin());
  std::copy(sd.begin(), sd.end(), model.scaler.std.begin());
  model.training_seed = field<std::uint64_t>(j, "training_seed");
  if (j.contains("latent_paths") && !j["latent_paths"].is_null()) {
    const auto& pj = j["latent_paths"];
    if (!pj.is_array() || pj.size() != 2) throw ValidationError("model JSON: latent_paths must hold two groups");
    std::array<GroupLatentPath, 2> paths{};
    for (std::size_t g = 0; g < 2; ++g) {
      const auto c = field<std::vector<double>>(pj[g], "centroid");
      const auto v = field<std::vector<double>>(pj[g], "per_mmhg");
      if (c.size() != kLatentDim || v.size() != kLatentDim) {
        throw ValidationError("model JSON: latent path vectors must have 2 entries");
      }
      paths[g] = {{c[0], c[1]}, {v[0], v[1]}};
    }
    model.latent_paths = paths;
  }
  return model;
}

std::string serialize_model(const RVaeModel& model) { return model_to_json(model).dump(2) + "\n"; }

RVaeModel deserialize_model(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("model JSON: parse error: ") + e.what());
  }
  return model_from_json(j);
}

void save_model(const std::filesystem::path& path, const RVaeModel& model) {
  csv::write_text(path, serialize_model(model));
}

RVaeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read model file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace rvae
