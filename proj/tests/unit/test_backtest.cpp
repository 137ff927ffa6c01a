#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "crosspred/backtest.hpp"
#include "crosspred/error.hpp"
#include "support.hpp"

using namespace crosspred;
namespace ts = testing_support;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no crosspred::Error thrown";
  return Errc::Config;
}

BacktestConfig small_config(Objective obj = Objective::MaxSharpe) {
  BacktestConfig c;
  c.window_months = 24;
  c.objective = obj;
  c.ridge.fixed = 0.5;
  return c;
}

AlignedSample truncate(const AlignedSample& s, Eigen::Index t) {
  AlignedSample out = s;
  out.pairs.resize(static_cast<std::size_t>(t));
  return out;
}

// Leading singular pair of the window mean, signed so Λ's largest-magnitude entry is positive.
double mr_oracle_return(const AlignedSample& s, Eigen::Index k, Eigen::Index window) {
  const Eigen::Index n = s.n_assets(), m = s.n_signals();
  Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(n * n, m);
  for (Eigen::Index t = k - window; t < k; ++t) {
    const auto& p = s.pairs[static_cast<std::size_t>(t)];
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) pi.row(i * n + j) += p.returns(j) * p.signals.row(i);
  }
  pi /= double(window);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(pi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd lambda = svd.matrixV().col(0), phi = svd.matrixU().col(0);
  Eigen::Index big;
  lambda.cwiseAbs().maxCoeff(&big);
  if (lambda(big) < 0) {
    lambda = -lambda;
    phi = -phi;
  }
  const auto& p = s.pairs[static_cast<std::size_t>(k)];
  const Eigen::VectorXd sl = p.signals * lambda;
  double r = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) r += phi(i * n + j) * sl(i) * p.returns(j);
  return r;
}

BacktestResult synthetic_result(const std::vector<double>& returns) {
  BacktestResult r;
  const MonthStamp start{2010, 1};
  for (std::size_t k = 0; k < returns.size(); ++k) {
    r.dates.push_back(start.plus_months(static_cast<int>(k)));
    r.oos_returns.push_back(returns[k]);
    WeightVector<double> w;
    w.weights = Eigen::VectorXd::Constant(2, 0.5);
    r.weights_history.push_back(w);
  }
  return r;
}

}  // namespace

TEST(Backtest, MinimalSampleGivesOneReturn) {
  const auto s = ts::random_sample(1, 3, 2, 25);
  const auto r = run(s, small_config());
  ASSERT_EQ(r.oos_returns.size(), 1u);
  EXPECT_EQ(r.dates[0], s.pairs[24].return_date);
}

TEST(Backtest, WindowAccounting) {
  const auto s = ts::random_sample(2, 3, 2, 40);
  const auto r = run(s, small_config());
  EXPECT_EQ(r.oos_returns.size(), 16u);
  EXPECT_EQ(r.weights_history.size(), 16u);
  EXPECT_EQ(r.params_history.size(), 16u);
  for (std::size_t o = 0; o < 16; ++o) EXPECT_EQ(r.dates[o], s.pairs[24 + o].return_date);
}

TEST(Backtest, InsufficientHistory) {
  EXPECT_EQ(code_of([] { run(ts::random_sample(3, 3, 2, 24), small_config()); }), Errc::InsufficientHistory);
  auto s = ts::random_sample(3, 3, 2, 40);
  auto c = small_config();
  c.oos_start = s.pairs[10].return_date;
  EXPECT_EQ(code_of([&] { run(s, c); }), Errc::InsufficientHistory);
  c.oos_start = s.pairs[30].return_date;
  const auto r = run(s, c);
  EXPECT_EQ(r.oos_returns.size(), 10u);
  EXPECT_EQ(r.dates.front(), s.pairs[30].return_date);
}

TEST(Backtest, MaxReturnMatchesIndependentSvd) {
  const auto s = ts::random_sample(4, 3, 2, 36);
  const auto r = run(s, small_config(Objective::MaxReturn));
  for (std::size_t o = 0; o < r.oos_returns.size(); ++o)
    EXPECT_NEAR(r.oos_returns[o], mr_oracle_return(s, 24 + Eigen::Index(o), 24), 1e-12);
}

TEST(Backtest, NoLookAhead) {
  auto s = ts::random_sample(5, 3, 2, 40);
  const auto full = run(s, small_config());
  // Truncating and scrambling future pairs leaves earlier months untouched.
  auto cut = truncate(s, 32);
  const auto part = run(cut, small_config());
  std::mt19937_64 rng(99);
  for (std::size_t k = 32; k < 40; ++k) {
    s.pairs[k].returns = ts::gaussian(rng, 3, 1);
    s.pairs[k].signals = ts::gaussian(rng, 3, 2);
  }
  const auto scrambled = run(s, small_config());
  for (std::size_t o = 0; o < part.oos_returns.size(); ++o) {
    EXPECT_EQ(part.oos_returns[o], full.oos_returns[o]);
    EXPECT_EQ(scrambled.oos_returns[o], full.oos_returns[o]);
    EXPECT_EQ(part.weights_history[o].weights, full.weights_history[o].weights);
  }
  // The month that first uses a scrambled pair does change.
  EXPECT_NE(scrambled.oos_returns[8], full.oos_returns[8]);
}

TEST(Backtest, Deterministic) {
  const auto s = ts::random_sample(6, 3, 2, 40);
  const auto a = run(s, small_config()), b = run(s, small_config());
  EXPECT_EQ(a.oos_returns, b.oos_returns);
}

TEST(Backtest, ZeroCostAndLeverageConstraints) {
  const auto s = ts::random_sample(7, 4, 2, 40);
  auto c = small_config();
  c.zero_cost = true;
  c.leverage = 2.0;
  const auto r = run(s, c);
  for (const auto& w : r.weights_history) {
    EXPECT_NEAR(w.weights.sum(), 0.0, 1e-12);
    EXPECT_NEAR(w.weights.cwiseAbs().sum(), 2.0, 1e-12);
  }
  const auto perf = performance(r.oos_returns, [&] {
    std::vector<Eigen::VectorXd> ws;
    for (const auto& w : r.weights_history) ws.push_back(w.weights);
    return ws;
  }());
  EXPECT_NEAR(*perf.asum_avg, 2.0, 1e-12);
  EXPECT_NEAR(*perf.sum_avg, 0.0, 1e-12);
}

TEST(Backtest, ParallelMatchesSequential) {
  const auto s = ts::random_sample(8, 3, 2, 40);
  for (auto obj : {Objective::MaxSharpe, Objective::MaxReturn}) {
    auto c = small_config(obj);
    c.warm_start = false;
    const auto seq = run(s, c);
    c.threads = 3;
    const auto par = run(s, c);
    EXPECT_EQ(seq.oos_returns, par.oos_returns);
    for (std::size_t o = 0; o < seq.params_history.size(); ++o)
      EXPECT_EQ(seq.params_history[o].phi, par.params_history[o].phi);
  }
}

TEST(Backtest, WarmStartReachesSameSolution) {
  const auto s = ts::random_sample(9, 3, 2, 34);
  auto c = small_config();
  const auto warm = run(s, c);
  c.warm_start = false;
  const auto cold = run(s, c);
  for (std::size_t o = 0; o < warm.oos_returns.size(); ++o) {
    EXPECT_TRUE(warm.converged[o]);
    EXPECT_NEAR(warm.oos_returns[o], cold.oos_returns[o], 1e-6 * (1 + std::abs(cold.oos_returns[o])));
  }
}

TEST(Backtest, CrossValidatedPenaltyComesFromGrid) {
  const auto s = ts::random_sample(10, 3, 2, 30);
  auto c = small_config();
  c.ridge.cross_validate = true;
  c.ridge.grid = {10.0, 1.0, 0.1};
  c.ridge.folds = 3;
  const auto r = run(s, c);
  for (double l : r.chosen_lambda_history) EXPECT_TRUE(l == 10.0 || l == 1.0 || l == 0.1);
}

TEST(Backtest, ConfigErrors) {
  const auto s = ts::random_sample(11, 3, 2, 40);
  auto expect_config = [&](const std::function<void(BacktestConfig&)>& edit) {
    auto c = small_config();
    edit(c);
    EXPECT_EQ(code_of([&] { run(s, c); }), Errc::Config);
  };
  expect_config([](BacktestConfig& c) { c.window_months = 12; });
  expect_config([](BacktestConfig& c) { c.leverage = 0.0; });
  expect_config([](BacktestConfig& c) { c.ridge.fixed = -1; });
  expect_config([](BacktestConfig& c) {
    c.ridge.cross_validate = true;
    c.ridge.folds = 1;
  });
  expect_config([](BacktestConfig& c) {
    c.restriction = Restriction::Self;
    c.zero_cost = true;
  });
}

TEST(MedianSplit, ConstantStateIsAllLow) {
  const auto r = synthetic_result({0.01, 0.02, -0.01, 0.03});
  DatedSeries state{r.dates, std::vector<double>(4, 1.0)};
  const auto m = split_by_median(r, state);
  EXPECT_EQ(m.n_low, 4u);
  EXPECT_EQ(m.n_high, 0u);
  EXPECT_FALSE(m.high);
  ASSERT_TRUE(m.low);
  EXPECT_NEAR(m.low->mu_monthly_pct, 1.25, 1e-12);
}

TEST(MedianSplit, AlternatingStateSplitsEvenly) {
  const auto r = synthetic_result({0.01, 0.05, 0.02, 0.06, 0.03, 0.07});
  DatedSeries state{r.dates, {0, 1, 0, 1, 0, 1}};
  const auto m = split_by_median(r, state);
  EXPECT_DOUBLE_EQ(m.median, 0.5);
  EXPECT_EQ(m.n_high, 3u);
  EXPECT_EQ(m.n_low, 3u);
  EXPECT_NEAR(m.high->mu_monthly_pct, 6.0, 1e-12);
  EXPECT_NEAR(m.low->mu_monthly_pct, 2.0, 1e-12);
  EXPECT_NEAR(*m.high->asum_avg, 1.0, 1e-15);
}

TEST(MedianSplit, StateEqualToReturnRanksMeans) {
  std::mt19937_64 rng(12);
  const Eigen::VectorXd x = ts::gaussian(rng, 51, 1);
  const auto r = synthetic_result(std::vector<double>(x.data(), x.data() + x.size()));
  const auto m = split_by_median(r, r.returns_series());
  EXPECT_EQ(m.n_high, 25u);
  EXPECT_EQ(m.n_low, 26u);
  EXPECT_GT(m.high->mu_monthly_pct, m.low->mu_monthly_pct);
}

TEST(MedianSplit, MissingStateIsCoverageGap) {
  const auto r = synthetic_result({0.01, 0.02, 0.03});
  DatedSeries state{{r.dates[0], r.dates[2]}, {1.0, 2.0}};
  EXPECT_EQ(code_of([&] { split_by_median(r, state); }), Errc::CoverageGap);
}

TEST(TrailingSharpe, FullWindowIsSampleSharpe) {
  std::mt19937_64 rng(13);
  const Eigen::VectorXd x = (ts::gaussian(rng, 60, 1, 0.04).array() + 0.01).matrix();
  const auto r = synthetic_result(std::vector<double>(x.data(), x.data() + x.size()));
  const auto pts = trailing_sharpe(r, 60);
  ASSERT_EQ(pts.size(), 1u);
  const double sd = std::sqrt((x.array() - x.mean()).square().sum() / 59.0);
  EXPECT_NEAR(*pts[0].sharpe, std::sqrt(12.0) * x.mean() / sd, 1e-12);
  EXPECT_EQ(pts[0].date, r.dates.back());
  EXPECT_EQ(trailing_sharpe(r, 40).size(), 21u);
}

TEST(TrailingSharpe, DecaysAfterRegimeChange) {
  std::mt19937_64 rng(14);
  Eigen::VectorXd x = ts::gaussian(rng, 240, 1, 0.03);
  x.head(120).array() += 0.02;
  const auto r = synthetic_result(std::vector<double>(x.data(), x.data() + x.size()));
  const auto pts = trailing_sharpe(r, 120);
  ASSERT_EQ(pts.size(), 121u);
  EXPECT_GT(*pts.front().sharpe, 1.5);
  EXPECT_LT(std::abs(*pts.back().sharpe), *pts.front().sharpe / 2);
  EXPECT_GT(*pts[30].sharpe, *pts[90].sharpe);
}

TEST(TrailingSharpe, FlatSeriesHasNoSharpe) {
  const auto r = synthetic_result(std::vector<double>(10, 0.01));
  for (const auto& p : trailing_sharpe(r, 5)) EXPECT_FALSE(p.sharpe);
}

TEST(TrailingSharpe, BenchmarkRatio) {
  std::mt19937_64 rng(15);
  const Eigen::VectorXd x = (ts::gaussian(rng, 30, 1, 0.04).array() + 0.01).matrix();
  const auto r = synthetic_result(std::vector<double>(x.data(), x.data() + x.size()));
  DatedSeries bench = r.returns_series();
  for (auto& v : bench.values) v *= 3.0;
  for (const auto& p : trailing_sharpe(r, 20, &bench)) EXPECT_NEAR(*p.ratio, 1.0, 1e-12);
  bench.dates.pop_back();
  bench.values.pop_back();
  EXPECT_FALSE(trailing_sharpe(r, 20, &bench).back().benchmark_sharpe);
}

TEST(TrailingSharpe, Errors) {
  const auto r = synthetic_result({0.01, 0.02, 0.03});
  EXPECT_EQ(code_of([&] { trailing_sharpe(r, 4); }), Errc::TooShort);
  EXPECT_EQ(code_of([&] { trailing_sharpe(r, 1); }), Errc::Config);
}
