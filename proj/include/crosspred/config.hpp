#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace crosspred {

/// `key = value` lines, `#` comments, optional `[section]` headers that prefix the
/// following keys as `section.key`. Values may be double-quoted. Later keys win.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in, const std::string& source = "<config>");
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }
  void erase(const std::string& key) { entries_.erase(key); }
  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Keys that start with `prefix`.
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

  /// Sorted `key = value` lines; parse(serialize()) reproduces the entries.
  std::string serialize() const;

 private:
  std::map<std::string, std::string> entries_;
};

double parse_double(const std::string& text, const std::string& what);
bool parse_bool(const std::string& text, const std::string& what);

/// `[[a, b], [c, d]]` (row-major nested lists) or a bare number for a 1×1 matrix.
Eigen::MatrixXd parse_matrix(const std::string& text, const std::string& what);
/// `[a, b, c]`.
std::vector<double> parse_list(const std::string& text, const std::string& what);

}  // namespace crosspred
