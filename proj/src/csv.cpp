#include "crosspred/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "crosspred/error.hpp"

namespace crosspred::csv {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(',', start);
    out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

int Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

int Table::require(std::string_view name) const {
  int c = column(name);
  if (c < 0) throw Error(Errc::ParseError, source + ": missing column '" + std::string(name) + "'");
  return c;
}

std::string Table::where(std::size_t row) const {
  return source + ":" + std::to_string(line_numbers.at(row));
}

Table parse(std::istream& in, std::string source) {
  Table t;
  t.source = std::move(source);
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    auto view = trim(line);
    if (view.empty()) continue;
    if (!have_header) {
      if (lineno == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
      t.header = split(view);
      have_header = true;
      continue;
    }
    auto fields = split(view);
    if (fields.size() != t.header.size())
      throw Error(Errc::ParseError, t.source + ":" + std::to_string(lineno) + ": expected " +
                                        std::to_string(t.header.size()) + " fields, got " +
                                        std::to_string(fields.size()));
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(lineno);
  }
  if (!have_header) throw Error(Errc::ParseError, t.source + ": empty file");
  return t;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ParseError, "cannot open " + path.string());
  return parse(in, path.string());
}

double to_double(std::string_view field, const std::string& where) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty())
    throw Error(Errc::ParseError, where + ": not a number '" + std::string(field) + "'");
  return v;
}

std::string format(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

}  // namespace crosspred::csv
