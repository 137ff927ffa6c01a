#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crosspred/month.hpp"

namespace crosspred {

/// Dated scalar series (strategy returns, a state variable such as sentiment or VIX).
struct DatedSeries {
  std::vector<MonthStamp> dates;
  std::vector<double> values;

  std::size_t size() const { return dates.size(); }
  /// Value at `date`, if present.
  std::optional<double> at(MonthStamp date) const;
};

/// Dated multi-column series, e.g. factor returns. Rows follow `dates`.
struct DatedFrame {
  std::vector<MonthStamp> dates;
  std::vector<std::string> columns;
  Eigen::MatrixXd values;

  std::optional<Eigen::Index> row_of(MonthStamp date) const;
};

/// `date,<name>` with exactly one value column; `column` selects one when there are more.
DatedSeries load_dated_series(const std::filesystem::path& path, const std::string& column = {});
/// `date,<c1>,...,<cK>`.
DatedFrame load_dated_frame(const std::filesystem::path& path);

}  // namespace crosspred
