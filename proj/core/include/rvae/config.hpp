#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "rvae/analysis.hpp"
#include "rvae/baselines.hpp"
#include "rvae/training.hpp"

namespace rvae {

/// Everything a pipeline run can be configured with. Parsed from a
/// `key = value` file; unknown keys are rejected.
struct RunConfig {
  TrainConfig train;
  bool grid_search = true;  // false: train the base config directly
  RVaeGrid grid;
  BaselineGrid baselines;
  TraversalOptions traversal;
  DecompositionOptions decomposition;
  std::size_t threads = 0;  // 0 = hardware concurrency
  std::optional<std::uint64_t> seed;

  void validate() const;
};

/// Applies the keys of `text` on top of `base`. Throws ConfigError naming
/// the offending key.
RunConfig parse_run_config(std::string_view text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

/// Snapshot of every effective setting, for manifests.
nlohmann::ordered_json to_json(const RunConfig& config);

}  // namespace rvae
