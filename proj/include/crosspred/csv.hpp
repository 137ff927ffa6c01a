#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace crosspred::csv {

/// Comma-separated file with a header row. Fields are whitespace-trimmed; no quoting.
struct Table {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based line of each row in the source

  /// Column index, or -1.
  int column(std::string_view name) const;
  /// Column index; throws ParseError naming the file when absent.
  int require(std::string_view name) const;
  std::string where(std::size_t row) const;
};

Table read(const std::filesystem::path& path);
Table parse(std::istream& in, std::string source);

double to_double(std::string_view field, const std::string& where);

/// Shortest decimal text that parses back to the same double.
std::string format(double value);

}  // namespace crosspred::csv
