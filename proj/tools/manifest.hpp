#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace rvae::cli {

/// Lowercase hex SHA-256 of a file's bytes. Throws ValidationError when the
/// file cannot be read.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view bytes);

/// One manifest per run, written as manifest.json next to the artifacts.
class RunManifest {
 public:
  RunManifest(std::string command, std::uint64_t seed);

  void set_config(nlohmann::ordered_json config) { config_ = std::move(config); }
  void add_input(const std::filesystem::path& path);
  void add_artifact(const std::filesystem::path& path);
  void note(const std::string& key, nlohmann::ordered_json value) { extra_[key] = std::move(value); }

  nlohmann::ordered_json to_json() const;
  void write(const std::filesystem::path& dir) const;

 private:
  std::string command_;
  std::uint64_t seed_;
  nlohmann::ordered_json config_ = nlohmann::ordered_json::object();
  nlohmann::ordered_json extra_ = nlohmann::ordered_json::object();
  std::vector<std::filesystem::path> inputs_;
  std::vector<std::filesystem::path> artifacts_;
  std::chrono::system_clock::time_point started_;
  std::chrono::steady_clock::time_point started_mono_;
};

}  // namespace rvae::cli
