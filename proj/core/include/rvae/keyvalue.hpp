#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace rvae {

/// `key = value` configuration text. '#' starts a comment; blank lines are
/// ignored; a repeated key is an error.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::string_view text);
  static KeyValueFile load(const std::filesystem::path& path);

  bool contains(std::string_view key) const;
  const std::map<std::string, std::string, std::less<>>& entries() const { return entries_; }

  /// Typed accessors throw ConfigError naming the key on a malformed value.
  double get_double(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;
  std::uint64_t get_uint(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::string get_string(std::string_view key) const;
  std::vector<double> get_double_list(std::string_view key) const;
  std::vector<std::int64_t> get_int_list(std::string_view key) const;

 private:
  const std::string& raw(std::string_view key) const;
  std::map<std::string, std::string, std::less<>> entries_;
};

}  // namespace rvae
