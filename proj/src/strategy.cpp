#include "crosspred/strategy.hpp"

#include <numeric>

namespace crosspred {

PerformanceReport performance(std::span<const double> returns, double periods_per_year, double gamma) {
  if (returns.size() < 2) throw Error(Errc::TooShort, "performance needs at least 2 returns");
  const double n = static_cast<double>(returns.size());
  const double mean = std::accumulate(returns.begin(), returns.end(), 0.0) / n;
  double ss = 0;
  for (double r : returns) ss += (r - mean) * (r - mean);
  const double sd = std::sqrt(ss / (n - 1));

  PerformanceReport rep;
  rep.n_months = returns.size();
  rep.mu_monthly_pct = mean * 100.0;
  rep.sigma_monthly_pct = sd * 100.0;
  if (sd > 1e-14 * std::max(1.0, std::abs(mean))) rep.sharpe_annualized = mean / sd * std::sqrt(periods_per_year);
  rep.ce_annual = certainty_equivalent(mean, sd, gamma);
  return rep;
}

PerformanceReport performance(std::span<const double> returns, std::span<const Eigen::VectorXd> weights,
                              double periods_per_year, double gamma) {
  if (weights.size() != returns.size())
    throw Error(Errc::DimensionMismatch, "one weight vector per return is required");
  PerformanceReport rep = performance(returns, periods_per_year, gamma);
  double sum = 0, asum = 0;
  for (const auto& w : weights) {
    sum += w.sum();
    asum += w.cwiseAbs().sum();
  }
  rep.sum_avg = sum / static_cast<double>(weights.size());
  rep.asum_avg = asum / static_cast<double>(weights.size());
  return rep;
}

}  // namespace crosspred
