#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rvae::csv {

/// Minimal comma-separated table: no quoting, UTF-8, '.' decimal point.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row

  std::optional<std::size_t> column(std::string_view name) const;
};

Table read(const std::filesystem::path& path);
Table parse(std::string_view text);

std::vector<std::string> split_line(std::string_view line);

/// Strict decimal parse: the whole (trimmed) field must be consumed and the
/// value finite.
std::optional<double> parse_double(std::string_view field);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

/// Writes `text` to `path`, throwing ValidationError on any I/O failure.
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace rvae::csv
