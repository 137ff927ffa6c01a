#include "crosspred/panel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include "crosspred/csv.hpp"
#include "crosspred/error.hpp"

namespace crosspred {
namespace {

// Assigns dense indices in order of first appearance.
class Interner {
 public:
  int operator()(const std::string& key) {
    auto [it, inserted] = index_.try_emplace(key, static_cast<int>(names_.size()));
    if (inserted) names_.push_back(key);
    return it->second;
  }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

 private:
  std::unordered_map<std::string, int> index_;
  std::vector<std::string> names_;
};

double finite_value(std::string_view field, const std::string& where) {
  double v = csv::to_double(field, where);
  if (!std::isfinite(v)) throw Error(Errc::ParseError, where + ": non-finite value");
  return v;
}

// Cell grid keyed by (date ordinal, asset, column) with duplicate detection.
class Grid {
 public:
  void put(MonthStamp date, int asset, int col, double v, const std::string& where) {
    auto [it, inserted] = cells_.try_emplace({date.ordinal(), asset, col}, v);
    if (!inserted) throw Error(Errc::DuplicateKey, where + ": duplicate entry for " + date.str());
    dates_.insert(date.ordinal());
  }

  std::vector<MonthStamp> dates() const {
    std::vector<MonthStamp> out;
    for (int ord : dates_) out.push_back(MonthStamp::from_ordinal(ord));
    return out;
  }

  // Value, or throws MissingCell naming the hole.
  double at(MonthStamp date, int asset, int col, const std::string& asset_name,
            const std::string& col_name, const std::string& source) const {
    auto it = cells_.find({date.ordinal(), asset, col});
    if (it == cells_.end())
      throw Error(Errc::MissingCell, source + ": no value for date " + date.str() + ", asset " +
                                         asset_name + ", " + col_name);
    return it->second;
  }

 private:
  std::map<std::tuple<int, int, int>, double> cells_;
  std::set<int> dates_;
};

}  // namespace

SignalPanel load_signals(const std::filesystem::path& path, Layout layout) {
  const csv::Table t = csv::read(path);
  const int c_date = t.require("date");
  const int c_asset = t.require("asset");
  if (c_date != 0 || c_asset != 1)
    throw Error(Errc::ParseError, t.source + ": header must start with date,asset");

  Interner assets, signals;
  Grid grid;
  if (layout == Layout::Long) {
    const int c_sig = t.require("signal");
    const int c_val = t.require("value");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& row = t.rows[r];
      const auto where = t.where(r);
      MonthStamp d;
      try {
        d = MonthStamp::parse(row[c_date]);
      } catch (const Error& e) {
        throw Error(Errc::ParseError, where + ": " + e.what());
      }
      int a = assets(row[c_asset]);
      int s = signals(row[c_sig]);
      grid.put(d, a, s, finite_value(row[c_val], where), where + " (" + row[c_asset] + "," + row[c_sig] + ")");
    }
  } else {
    if (t.header.size() < 3) throw Error(Errc::ParseError, t.source + ": wide layout needs at least one signal column");
    for (std::size_t c = 2; c < t.header.size(); ++c) {
      if (static_cast<int>(signals.size()) != signals(t.header[c]))
        throw Error(Errc::DuplicateKey, t.source + ": repeated signal column '" + t.header[c] + "'");
    }
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& row = t.rows[r];
      const auto where = t.where(r);
      MonthStamp d;
      try {
        d = MonthStamp::parse(row[c_date]);
      } catch (const Error& e) {
        throw Error(Errc::ParseError, where + ": " + e.what());
      }
      int a = assets(row[c_asset]);
      for (std::size_t c = 2; c < row.size(); ++c)
        grid.put(d, a, static_cast<int>(c - 2), finite_value(row[c], where), where + " (" + row[c_asset] + ")");
    }
  }

  SignalPanel panel;
  panel.dates = grid.dates();
  panel.assets = assets.names();
  panel.signals = signals.names();
  if (panel.dates.empty()) throw Error(Errc::ParseError, t.source + ": no data rows");
  const auto n = panel.n_assets(), m = panel.n_signals();
  if (n < 2) throw Error(Errc::DimensionMismatch, t.source + ": need at least 2 assets");
  for (auto d : panel.dates) {
    Eigen::MatrixXd s(n, m);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < m; ++j)
        s(i, j) = grid.at(d, static_cast<int>(i), static_cast<int>(j), panel.assets[i],
                          "signal " + panel.signals[j], t.source);
    panel.values.push_back(std::move(s));
  }
  return panel;
}

ReturnPanel load_returns(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  const int c_date = t.require("date");
  const int c_asset = t.require("asset");
  const int c_ret = t.require("ret_excess");
  Interner assets;
  Grid grid;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const auto where = t.where(r);
    MonthStamp d;
    try {
      d = MonthStamp::parse(row[c_date]);
    } catch (const Error& e) {
      throw Error(Errc::ParseError, where + ": " + e.what());
    }
    grid.put(d, assets(row[c_asset]), 0, finite_value(row[c_ret], where), where + " (" + row[c_asset] + ")");
  }
  ReturnPanel panel;
  panel.dates = grid.dates();
  panel.assets = assets.names();
  if (panel.dates.empty()) throw Error(Errc::ParseError, t.source + ": no data rows");
  for (auto d : panel.dates) {
    Eigen::VectorXd v(panel.n_assets());
    for (Eigen::Index i = 0; i < v.size(); ++i)
      v(i) = grid.at(d, static_cast<int>(i), 0, panel.assets[i], "ret_excess", t.source);
    panel.values.push_back(std::move(v));
  }
  return panel;
}

void write_signals(const SignalPanel& panel, const std::filesystem::path& path, Layout layout) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::ParseError, "cannot write " + path.string());
  if (layout == Layout::Long) {
    out << "date,asset,signal,value\n";
    for (std::size_t d = 0; d < panel.dates.size(); ++d)
      for (Eigen::Index i = 0; i < panel.n_assets(); ++i)
        for (Eigen::Index j = 0; j < panel.n_signals(); ++j)
          out << panel.dates[d].str() << ',' << panel.assets[i] << ',' << panel.signals[j] << ','
              << csv::format(panel.values[d](i, j)) << '\n';
  } else {
    out << "date,asset";
    for (const auto& s : panel.signals) out << ',' << s;
    out << '\n';
    for (std::size_t d = 0; d < panel.dates.size(); ++d)
      for (Eigen::Index i = 0; i < panel.n_assets(); ++i) {
        out << panel.dates[d].str() << ',' << panel.assets[i];
        for (Eigen::Index j = 0; j < panel.n_signals(); ++j) out << ',' << csv::format(panel.values[d](i, j));
        out << '\n';
      }
  }
}

void write_returns(const ReturnPanel& panel, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::ParseError, "cannot write " + path.string());
  out << "date,asset,ret_excess\n";
  for (std::size_t d = 0; d < panel.dates.size(); ++d)
    for (Eigen::Index i = 0; i < panel.n_assets(); ++i)
      out << panel.dates[d].str() << ',' << panel.assets[i] << ',' << csv::format(panel.values[d](i)) << '\n';
}

SignalPanel standardize(const SignalPanel& panel) {
  SignalPanel out = panel;
  out.warnings.clear();
  const double n = static_cast<double>(panel.n_assets());
  for (std::size_t d = 0; d < out.values.size(); ++d) {
    auto& s = out.values[d];
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      auto col = s.col(j);
      const double mean = col.mean();
      const double sd = std::sqrt((col.array() - mean).square().sum() / n);
      if (!(sd > 1e-14 * std::max(1.0, std::abs(mean)))) {
        col.setZero();
        out.warnings.push_back("constant signal '" + panel.signals[j] + "' at " + panel.dates[d].str() +
                               " set to zero");
        continue;
      }
      col = (col.array() - mean) / sd;
    }
  }
  out.standardized = true;
  return out;
}

AlignedSample align(const SignalPanel& signals, const ReturnPanel& returns) {
  if (signals.assets.size() != returns.assets.size())
    throw Error(Errc::AssetMismatch, "signal panel has " + std::to_string(signals.assets.size()) +
                                         " assets, return panel has " + std::to_string(returns.assets.size()));
  // Map return-panel columns onto signal-panel asset order.
  std::unordered_map<std::string, Eigen::Index> ret_pos;
  for (std::size_t i = 0; i < returns.assets.size(); ++i) ret_pos[returns.assets[i]] = static_cast<Eigen::Index>(i);
  std::vector<Eigen::Index> perm;
  for (const auto& a : signals.assets) {
    auto it = ret_pos.find(a);
    if (it == ret_pos.end()) throw Error(Errc::AssetMismatch, "asset '" + a + "' has signals but no returns");
    perm.push_back(it->second);
  }

  std::map<int, std::size_t> ret_index;
  for (std::size_t k = 0; k < returns.dates.size(); ++k) ret_index[returns.dates[k].ordinal()] = k;

  AlignedSample sample;
  sample.assets = signals.assets;
  sample.signals = signals.signals;
  for (std::size_t k = 0; k < signals.dates.size(); ++k) {
    const MonthStamp next = signals.dates[k].plus_months(1);
    auto it = ret_index.find(next.ordinal());
    if (it == ret_index.end()) continue;
    const auto& r = returns.values[it->second];
    Eigen::VectorXd reordered(r.size());
    for (std::size_t i = 0; i < perm.size(); ++i) reordered(static_cast<Eigen::Index>(i)) = r(perm[i]);
    sample.pairs.push_back({signals.dates[k], next, signals.values[k], std::move(reordered)});
  }
  if (sample.pairs.empty())
    throw Error(Errc::NoOverlap, "no return date is one month after any signal date");
  if (sample.pairs.size() < 2)
    throw Error(Errc::TooShort, "only one (signal, next-month return) pair overlaps");
  return sample;
}

AlignedSample restrict_dates(const AlignedSample& sample, MonthStamp first, MonthStamp last) {
  AlignedSample out;
  out.assets = sample.assets;
  out.signals = sample.signals;
  for (const auto& p : sample.pairs)
    if (p.return_date >= first && p.return_date <= last) out.pairs.push_back(p);
  if (out.pairs.empty()) throw Error(Errc::NoOverlap, "no pairs with return dates in " + first.str() + ".." + last.str());
  return out;
}

}  // namespace crosspred
