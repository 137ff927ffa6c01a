#include "crosspred/dated.hpp"

#include <algorithm>
#include <cmath>

#include "crosspred/csv.hpp"
#include "crosspred/error.hpp"

namespace crosspred {

std::optional<double> DatedSeries::at(MonthStamp date) const {
  auto it = std::lower_bound(dates.begin(), dates.end(), date);
  if (it == dates.end() || *it != date) return std::nullopt;
  return values[static_cast<std::size_t>(it - dates.begin())];
}

std::optional<Eigen::Index> DatedFrame::row_of(MonthStamp date) const {
  auto it = std::lower_bound(dates.begin(), dates.end(), date);
  if (it == dates.end() || *it != date) return std::nullopt;
  return static_cast<Eigen::Index>(it - dates.begin());
}

DatedFrame load_dated_frame(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  if (t.require("date") != 0) throw Error(Errc::ParseError, t.source + ": first column must be date");
  if (t.header.size() < 2) throw Error(Errc::ParseError, t.source + ": no value columns");
  std::vector<std::pair<MonthStamp, std::size_t>> order;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    try {
      order.emplace_back(MonthStamp::parse(t.rows[r][0]), r);
    } catch (const Error& e) {
      throw Error(Errc::ParseError, t.where(r) + ": " + e.what());
    }
  }
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  DatedFrame f;
  f.columns.assign(t.header.begin() + 1, t.header.end());
  f.values.resize(static_cast<Eigen::Index>(order.size()), static_cast<Eigen::Index>(f.columns.size()));
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k > 0 && order[k].first == order[k - 1].first)
      throw Error(Errc::DuplicateKey, t.where(order[k].second) + ": repeated date " + order[k].first.str());
    f.dates.push_back(order[k].first);
    const auto& row = t.rows[order[k].second];
    for (std::size_t c = 1; c < row.size(); ++c) {
      const double v = csv::to_double(row[c], t.where(order[k].second));
      if (!std::isfinite(v)) throw Error(Errc::ParseError, t.where(order[k].second) + ": non-finite value");
      f.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c - 1)) = v;
    }
  }
  return f;
}

DatedSeries load_dated_series(const std::filesystem::path& path, const std::string& column) {
  const DatedFrame f = load_dated_frame(path);
  Eigen::Index c = 0;
  if (!column.empty()) {
    auto it = std::find(f.columns.begin(), f.columns.end(), column);
    if (it == f.columns.end()) throw Error(Errc::ParseError, path.string() + ": missing column '" + column + "'");
    c = it - f.columns.begin();
  } else if (f.columns.size() != 1) {
    throw Error(Errc::ParseError, path.string() + ": expected a single value column");
  }
  DatedSeries s;
  s.dates = f.dates;
  s.values.assign(f.values.col(c).data(), f.values.col(c).data() + f.values.rows());
  return s;
}

}  // namespace crosspred
