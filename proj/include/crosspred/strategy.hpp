#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "crosspred/error.hpp"
#include "crosspred/estimators.hpp"
#include "crosspred/managed.hpp"
#include "crosspred/month.hpp"
#include "crosspred/types.hpp"

namespace crosspred {

template <typename Scalar = double>
struct WeightVector {
  MonthStamp date;
  Vec<Scalar> weights;
  bool zero_cost = false;
  std::optional<double> leverage_target;
  bool degenerate = false;  // leverage requested but Σ|ω| < 1e-14; weights left at zero
};

/// ω = Ψ'S_tΛ, then centered by Θ when `zero_cost`, then rescaled so Σ|ω| equals `leverage`.
template <typename Scalar = double, typename DS>
WeightVector<Scalar> weights(const Eigen::MatrixBase<DS>& signals, const SdfParams<Scalar>& params, bool zero_cost,
                             std::optional<double> leverage = std::nullopt, MonthStamp date = {}) {
  const Index n = signals.rows();
  if (signals.cols() != params.lambda.size() || params.phi.size() != n * n)
    throw Error(Errc::DimensionMismatch, "S_t is " + std::to_string(n) + "x" + std::to_string(signals.cols()) +
                                             " but parameters have M=" + std::to_string(params.lambda.size()) +
                                             ", N²=" + std::to_string(params.phi.size()));
  WeightVector<Scalar> w;
  w.date = date;
  w.zero_cost = zero_cost;
  w.leverage_target = leverage;
  const Mat<Scalar> psi = unvec_transpose(params.phi);
  w.weights = psi.transpose() * (signals.template cast<Scalar>() * params.lambda);
  if (zero_cost) w.weights = CenteringProjector<Scalar>(n).apply(w.weights);
  if (leverage) {
    if (*leverage <= 0) throw Error(Errc::Config, "leverage target must be positive");
    const Scalar gross = w.weights.cwiseAbs().sum();
    if (gross < Scalar(1e-14)) {
      w.weights.setZero();
      w.degenerate = true;
    } else {
      w.weights *= Scalar(*leverage) / gross;
    }
  }
  return w;
}

template <typename Scalar, typename DR>
Scalar realized_return(const WeightVector<Scalar>& omega, const Eigen::MatrixBase<DR>& returns) {
  if (omega.weights.size() != returns.size())
    throw Error(Errc::DimensionMismatch, "weights and returns differ in length");
  return omega.weights.dot(returns.template cast<Scalar>());
}

struct PerformanceReport {
  double mu_monthly_pct = 0;
  double sigma_monthly_pct = 0;
  std::optional<double> sharpe_annualized;  // nullopt when the volatility is zero
  double ce_annual = 0;
  std::optional<double> sum_avg;   // time-series mean of Σω
  std::optional<double> asum_avg;  // time-series mean of Σ|ω|
  std::size_t n_months = 0;
};

/// Annual certainty equivalent 12μ − (γ/2)·12σ² from monthly decimal moments.
inline double certainty_equivalent(double mu_monthly, double sigma_monthly, double gamma) {
  if (gamma < 0) throw Error(Errc::Config, "risk aversion must be nonnegative");
  return 12.0 * mu_monthly - 0.5 * gamma * 12.0 * sigma_monthly * sigma_monthly;
}

/// Monthly mean and sd (divisor n−1) in percent, Sharpe annualized by √periods.
PerformanceReport performance(std::span<const double> returns, double periods_per_year = 12.0, double gamma = 2.0);

/// Same, plus the Sum/ASum leverage diagnostics of the weights that produced the returns.
PerformanceReport performance(std::span<const double> returns, std::span<const Eigen::VectorXd> weights,
                              double periods_per_year = 12.0, double gamma = 2.0);

}  // namespace crosspred
