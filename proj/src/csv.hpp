#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace fairfl::detail {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of `name` in the header, or -1.
  int column(std::string_view name) const;
};

/// Comma-separated, first row header, RFC 4180 quoting. Fields are trimmed
/// of surrounding whitespace. Throws Error{dataset} on a missing file or a
/// row whose field count differs from the header.
CsvTable read_csv(const std::filesystem::path& path);

std::vector<std::string> split_csv_line(std::string_view line);

std::string trim(std::string_view s);

}  // namespace fairfl::detail
