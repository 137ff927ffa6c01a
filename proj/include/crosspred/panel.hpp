#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crosspred/month.hpp"

namespace crosspred {

enum class Layout { Long, Wide };

/// Dated N×M characteristic matrices S_t (rows = assets, columns = signals).
struct SignalPanel {
  std::vector<MonthStamp> dates;
  std::vector<std::string> assets;
  std::vector<std::string> signals;
  std::vector<Eigen::MatrixXd> values;
  bool standardized = false;
  // Constant columns zeroed by standardize(), one entry per (date, signal).
  std::vector<std::string> warnings;

  Eigen::Index n_assets() const { return static_cast<Eigen::Index>(assets.size()); }
  Eigen::Index n_signals() const { return static_cast<Eigen::Index>(signals.size()); }
};

/// Dated N-vectors of monthly excess returns, decimal units.
struct ReturnPanel {
  std::vector<MonthStamp> dates;
  std::vector<std::string> assets;
  std::vector<Eigen::VectorXd> values;

  Eigen::Index n_assets() const { return static_cast<Eigen::Index>(assets.size()); }
};

/// One (S_t, r_{t+1}) observation.
struct SamplePair {
  MonthStamp signal_date;
  MonthStamp return_date;
  Eigen::MatrixXd signals;
  Eigen::VectorXd returns;
};

struct AlignedSample {
  std::vector<std::string> assets;
  std::vector<std::string> signals;
  std::vector<SamplePair> pairs;

  Eigen::Index T() const { return static_cast<Eigen::Index>(pairs.size()); }
  Eigen::Index n_assets() const { return static_cast<Eigen::Index>(assets.size()); }
  Eigen::Index n_signals() const { return static_cast<Eigen::Index>(signals.size()); }
};

SignalPanel load_signals(const std::filesystem::path& path, Layout layout);
ReturnPanel load_returns(const std::filesystem::path& path);

void write_signals(const SignalPanel& panel, const std::filesystem::path& path, Layout layout);
void write_returns(const ReturnPanel& panel, const std::filesystem::path& path);

/// Per-date, per-column cross-sectional z-scores with population (divisor N) standard
/// deviation. Constant columns become zero and are recorded in `warnings`.
SignalPanel standardize(const SignalPanel& panel);

/// Pairs each signal date t with the return dated t + 1 month. Returns are reordered to
/// the signal panel's asset order when the universes match as sets.
AlignedSample align(const SignalPanel& signals, const ReturnPanel& returns);

/// Pairs whose return date lies in [first, last].
AlignedSample restrict_dates(const AlignedSample& sample, MonthStamp first, MonthStamp last);

}  // namespace crosspred
