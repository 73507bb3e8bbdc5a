#include "rvae/keyvalue.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "rvae/csv.hpp"
#include "rvae/error.hpp"

namespace rvae {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

KeyValueFile KeyValueFile::parse(std::string_view text) {
  KeyValueFile kv;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == text.npos ? text.npos : nl - pos);
    pos = nl == text.npos ? text.size() : nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != line.npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == line.npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (!kv.entries_.emplace(key, value).second) {
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }
  return kv;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool KeyValueFile::contains(std::string_view key) const { return entries_.find(key) != entries_.end(); }

const std::string& KeyValueFile::raw(std::string_view key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing key '" + std::string(key) + "'");
  return it->second;
}

double KeyValueFile::get_double(std::string_view key) const {
  auto v = csv::parse_double(raw(key));
  if (!v) throw ConfigError("key '" + std::string(key) + "': not a number");
  return *v;
}

std::int64_t KeyValueFile::get_int(std::string_view key) const {
  const std::string& s = raw(key);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("key '" + std::string(key) + "': not an integer");
  }
  return v;
}

std::uint64_t KeyValueFile::get_uint(std::string_view key) const {
  const std::int64_t v = get_int(key);
  if (v < 0) throw ConfigError("key '" + std::string(key) + "': must be non-negative");
  return static_cast<std::uint64_t>(v);
}

bool KeyValueFile::get_bool(std::string_view key) const {
  const std::string& s = raw(key);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("key '" + std::string(key) + "': not a boolean");
}

std::string KeyValueFile::get_string(std::string_view key) const { return raw(key); }

std::vector<double> KeyValueFile::get_double_list(std::string_view key) const {
  std::vector<double> out;
  for (const auto& field : csv::split_line(raw(key))) {
    auto v = csv::parse_double(field);
    if (!v) throw ConfigError("key '" + std::string(key) + "': '" + field + "' is not a number");
    out.push_back(*v);
  }
  return out;
}

std::vector<std::int64_t> KeyValueFile::get_int_list(std::string_view key) const {
  std::vector<std::int64_t> out;
  for (const auto& field : csv::split_line(raw(key))) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
      throw ConfigError("key '" + std::string(key) + "': '" + field + "' is not an integer");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace rvae
