#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "rvae/model.hpp"

namespace rvae {

inline constexpr int kModelSchemaVersion = 1;

nlohmann::ordered_json model_to_json(const RVaeModel& model);
/// Throws VersionError when schema_version is missing or unsupported and
/// ValidationError for any other malformed content.
RVaeModel model_from_json(const nlohmann::json& j);

/// Pretty-printed JSON with a trailing newline. Doubles use the shortest
/// representation that parses back to the same value.
std::string serialize_model(const RVaeModel& model);
RVaeModel deserialize_model(const std::string& text);

void save_model(const std::filesystem::path& path, const RVaeModel& model);
/// Throws ValidationError when the file cannot be read.
RVaeModel load_model(const std::filesystem::path& path);

}  // namespace rvae
