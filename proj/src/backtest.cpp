#include "crosspred/backtest.hpp"

#include <algorithm>
#include <thread>

#include "crosspred/error.hpp"

namespace crosspred {
namespace {

void validate(const BacktestConfig& c) {
  if (c.window_months < 24) throw Error(Errc::Config, "window must be at least 24 months");
  if (c.leverage && *c.leverage <= 0) throw Error(Errc::Config, "leverage must be positive");
  if (c.ridge.fixed < 0) throw Error(Errc::Config, "ridge penalty must be nonnegative");
  if (c.ridge.cross_validate && (c.ridge.folds < 2 || c.ridge.grid.empty()))
    throw Error(Errc::Config, "cross-validation needs >= 2 folds and a nonempty grid");
  if (c.restriction == Restriction::Self && c.zero_cost)
    throw Error(Errc::Config, "self-prediction is offered without the zero-cost projection only");
}

}  // namespace

WindowFit fit_window(const ManagedView<double>& window, const BacktestConfig& config,
                     const std::optional<SdfParams<double>>& init) {
  WindowFit out;
  if (config.objective == Objective::MaxReturn) {
    out.params = estimate_mr(window, config.restriction);
    return out;
  }
  SolverOptions opt = config.solver;
  opt.restriction = config.restriction;
  out.ridge = config.ridge.cross_validate ? cross_validate(window, config.ridge.grid, config.ridge.folds, opt).chosen
                                          : config.ridge.fixed;
  const SdfParams<double> start = init ? *init : estimate_mr(window, config.restriction);
  auto fit = estimate_ms_ridge(window, out.ridge, start, opt);
  out.params = std::move(fit.params);
  out.iterations = fit.trace.iterations;
  out.converged = fit.trace.converged;
  return out;
}

BacktestResult run(const AlignedSample& sample, const BacktestConfig& config) {
  validate(config);
  const Index total = sample.T();
  const Index window = config.window_months;
  Index first = window;
  if (config.oos_start) {
    first = total;
    for (Index k = 0; k < total; ++k)
      if (sample.pairs[static_cast<std::size_t>(k)].return_date >= *config.oos_start) {
        first = k;
        break;
      }
    if (first < window)
      throw Error(Errc::InsufficientHistory, "out-of-sample start " + config.oos_start->str() + " leaves " +
                                                 std::to_string(first) + " months before it; need " +
                                                 std::to_string(window));
  }
  if (first >= total)
    throw Error(Errc::InsufficientHistory, std::to_string(total) + " aligned months cannot fill a " +
                                               std::to_string(window) + "-month window plus one test month");

  const ManagedSeries<double> series = build_managed<double>(sample, config.zero_cost);
  const std::size_t n_oos = static_cast<std::size_t>(total - first);

  BacktestResult res;
  res.assets = sample.assets;
  res.signals = sample.signals;
  res.dates.resize(n_oos);
  res.oos_returns.resize(n_oos);
  res.weights_history.resize(n_oos);
  res.params_history.resize(n_oos);
  res.chosen_lambda_history.resize(n_oos);
  res.iterations.resize(n_oos);
  res.converged.resize(n_oos);

  auto step = [&](std::size_t o, const std::optional<SdfParams<double>>& init) {
    const Index k = first + static_cast<Index>(o);
    const auto& pair = sample.pairs[static_cast<std::size_t>(k)];
    WindowFit fit = fit_window(series.view(k - window, k), config, init);
    auto w = weights(pair.signals, fit.params, config.zero_cost, config.leverage, pair.return_date);
    res.dates[o] = pair.return_date;
    res.oos_returns[o] = realized_return(w, pair.returns);
    res.weights_history[o] = std::move(w);
    res.chosen_lambda_history[o] = fit.ridge;
    res.iterations[o] = fit.iterations;
    res.converged[o] = fit.converged;
    res.params_history[o] = std::move(fit.params);
  };

  if (config.warm_start && config.objective == Objective::MaxSharpe) {
    std::optional<SdfParams<double>> prev;
    for (std::size_t o = 0; o < n_oos; ++o) {
      step(o, prev);
      prev = res.params_history[o];
    }
  } else if (config.threads > 1 && n_oos > 1) {
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(config.threads), n_oos);
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
          try {
            for (std::size_t o = w; o < n_oos; o += workers) step(o, std::nullopt);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  } else {
    for (std::size_t o = 0; o < n_oos; ++o) step(o, std::nullopt);
  }
  return res;
}

BacktestResult run(const SignalPanel& signals, const ReturnPanel& returns, const BacktestConfig& config) {
  return run(align(signals, returns), config);
}

MedianSplit split_by_median(const BacktestResult& result, const DatedSeries& state) {
  std::vector<double> levels;
  for (const auto& d : result.dates) {
    auto v = state.at(d);
    if (!v) throw Error(Errc::CoverageGap, "state series has no value for " + d.str());
    levels.push_back(*v);
  }
  if (levels.empty()) throw Error(Errc::TooShort, "no out-of-sample months");
  std::vector<double> sorted = levels;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  MedianSplit out;
  out.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

  std::vector<double> hi, lo;
  std::vector<Eigen::VectorXd> whi, wlo;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const bool high = levels[k] > out.median;
    (high ? hi : lo).push_back(result.oos_returns[k]);
    (high ? whi : wlo).push_back(result.weights_history[k].weights);
  }
  out.n_high = hi.size();
  out.n_low = lo.size();
  if (hi.size() >= 2) out.high = performance(hi, whi);
  if (lo.size() >= 2) out.low = performance(lo, wlo);
  return out;
}

std::vector<TrailingPoint> trailing_sharpe(const DatedSeries& series, int window, const DatedSeries* benchmark) {
  if (window < 2) throw Error(Errc::Config, "trailing window must be at least 2");
  if (series.size() < static_cast<std::size_t>(window))
    throw Error(Errc::TooShort, "series of " + std::to_string(series.size()) + " months is shorter than the " +
                                    std::to_string(window) + "-month window");
  std::vector<TrailingPoint> out;
  const Eigen::Map<const Eigen::VectorXd> all(series.values.data(), static_cast<Index>(series.size()));
  for (std::size_t end = static_cast<std::size_t>(window); end <= series.size(); ++end) {
    TrailingPoint p;
    p.date = series.dates[end - 1];
    p.sharpe = annualized_sharpe(all.segment(static_cast<Index>(end) - window, window));
    if (benchmark) {
      Eigen::VectorXd b(window);
      bool covered = true;
      for (int k = 0; k < window && covered; ++k) {
        auto v = benchmark->at(series.dates[end - static_cast<std::size_t>(window) + static_cast<std::size_t>(k)]);
        if (v) b(k) = *v;
        covered = v.has_value();
      }
      if (covered) p.benchmark_sharpe = annualized_sharpe(b);
      if (p.sharpe && p.benchmark_sharpe && *p.benchmark_sharpe != 0.0) p.ratio = *p.sharpe / *p.benchmark_sharpe;
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace crosspred
