#include "crosspred/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "crosspred/error.hpp"

namespace crosspred {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in, const std::string& source) {
  KeyValueConfig cfg;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    if (text.front() == '[' && text.back() == ']' && text.find('=') == std::string::npos) {
      section = trim(text.substr(1, text.size() - 2));
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw Error(Errc::Config, source + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(text.substr(0, eq));
    std::string value = trim(text.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    } else if (auto hash = value.find(" #"); hash != std::string::npos) {
      value = trim(value.substr(0, hash));
    }
    if (key.empty()) throw Error(Errc::Config, source + ":" + std::to_string(lineno) + ": empty key");
    cfg.entries_[section.empty() ? key : section + "." + key] = value;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Config, "cannot open config " + path.string());
  return parse(in, path.string());
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  return v ? parse_double(*v, key) : fallback;
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  long long out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc{} || ptr != v->data() + v->size())
    throw Error(Errc::Config, key + ": not an integer '" + *v + "'");
  return out;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  auto v = get(key);
  return v ? parse_bool(*v, key) : fallback;
}

std::vector<std::string> KeyValueConfig::keys_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_)
    if (k.rfind(prefix, 0) == 0) out.push_back(k);
  return out;
}

std::string KeyValueConfig::serialize() const {
  std::ostringstream out;
  for (const auto& [k, v] : entries_) out << k << " = " << v << '\n';
  return out.str();
}

double parse_double(const std::string& text, const std::string& what) {
  double out = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    throw Error(Errc::Config, what + ": not a number '" + text + "'");
  return out;
}

bool parse_bool(const std::string& text, const std::string& what) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw Error(Errc::Config, what + ": not a boolean '" + text + "'");
}

Eigen::MatrixXd parse_matrix(const std::string& text, const std::string& what) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::Config, what + ": cannot parse matrix '" + text + "'");
  }
  if (j.is_number()) return Eigen::MatrixXd::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw Error(Errc::Config, what + ": expected [[...], ...]");
  const auto rows = static_cast<Eigen::Index>(j.size()), cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw Error(Errc::Config, what + ": ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!row[static_cast<std::size_t>(c)].is_number()) throw Error(Errc::Config, what + ": non-numeric entry");
      m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return m;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::Config, what + ": cannot parse list '" + text + "'");
  }
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) throw Error(Errc::Config, what + ": expected [...]");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw Error(Errc::Config, what + ": non-numeric entry");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace crosspred
