#pragma once

#include <optional>
#include <vector>

#include "crosspred/dated.hpp"
#include "crosspred/estimators.hpp"
#include "crosspred/managed.hpp"
#include "crosspred/panel.hpp"
#include "crosspred/strategy.hpp"

namespace crosspred {

struct RidgeSelection {
  double fixed = 1.0;
  bool cross_validate = false;
  std::vector<double> grid = default_ridge_grid();
  int folds = 5;
};

struct BacktestConfig {
  int window_months = 120;
  Objective objective = Objective::MaxSharpe;
  Restriction restriction = Restriction::Cross;
  bool zero_cost = false;
  std::optional<double> leverage;
  RidgeSelection ridge;
  std::optional<MonthStamp> oos_start;  // first out-of-sample return month
  bool warm_start = true;               // start each window from the previous solution
  SolverOptions solver;
  int threads = 1;  // used only without warm start
};

struct BacktestResult {
  std::vector<std::string> assets;
  std::vector<std::string> signals;
  std::vector<MonthStamp> dates;  // out-of-sample return months
  std::vector<double> oos_returns;
  std::vector<WeightVector<double>> weights_history;
  std::vector<SdfParams<double>> params_history;
  std::vector<double> chosen_lambda_history;
  std::vector<int> iterations;
  std::vector<bool> converged;

  DatedSeries returns_series() const { return {dates, oos_returns}; }
};

struct WindowFit {
  SdfParams<double> params;
  double ridge = 0;
  int iterations = 0;
  bool converged = true;
};

/// Estimates one window per the config. `init` warm-starts the Sharpe iteration; without it
/// the MR solution of the window is used.
WindowFit fit_window(const ManagedView<double>& window, const BacktestConfig& config,
                     const std::optional<SdfParams<double>>& init = std::nullopt);

/// Rolling out-of-sample run. For each out-of-sample month s the parameters are estimated
/// on the `window_months` pairs whose returns precede s, weights are formed from S_{s−1},
/// and applied to r_s.
BacktestResult run(const AlignedSample& sample, const BacktestConfig& config);
BacktestResult run(const SignalPanel& signals, const ReturnPanel& returns, const BacktestConfig& config);

struct MedianSplit {
  double median = 0;
  std::size_t n_high = 0;
  std::size_t n_low = 0;
  std::optional<PerformanceReport> high;  // state > median; nullopt if fewer than 2 months
  std::optional<PerformanceReport> low;   // state ≤ median
};

/// Splits out-of-sample months by the median of `state` over those months.
MedianSplit split_by_median(const BacktestResult& result, const DatedSeries& state);

struct TrailingPoint {
  MonthStamp date;
  std::optional<double> sharpe;
  std::optional<double> benchmark_sharpe;
  std::optional<double> ratio;  // sharpe / benchmark_sharpe
};

/// Annualized Sharpe ratio over each trailing `window` of the series, one point per date
/// with a full window. Throws TooShort when the series is shorter than the window.
std::vector<TrailingPoint> trailing_sharpe(const DatedSeries& series, int window = 120,
                                           const DatedSeries* benchmark = nullptr);

inline std::vector<TrailingPoint> trailing_sharpe(const BacktestResult& result, int window = 120,
                                                  const DatedSeries* benchmark = nullptr) {
  return trailing_sharpe(result.returns_series(), window, benchmark);
}

}  // namespace crosspred
