#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crosspred/dated.hpp"

namespace crosspred {

/// |t| statistics are capped here so exact fits stay finite in reports.
inline constexpr double kTStatCap = 1e6;

struct RegressionResult {
  Eigen::VectorXd coefficients;  // intercept first when one was added
  Eigen::VectorXd ols_se;        // classical, s² = SSR / (T − p)
  Eigen::VectorXd hac_se;        // filled by newey_west_tstats
  Eigen::VectorXd hac_t_stats;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd design;  // regressors as used, intercept column included
  Eigen::Index n_obs = 0;
  int lag_used = -1;
  bool has_intercept = true;
};

/// Least squares of y on X (an intercept column is prepended when `add_intercept`).
/// Throws RankDeficient if T ≤ p or the column-scaled design has condition number > 1e10.
RegressionResult ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, bool add_intercept = true);

/// floor(4 (T/100)^{2/9}).
int newey_west_lag(Eigen::Index n_obs);

/// Bartlett-kernel HAC covariance (X'X)⁻¹ S (X'X)⁻¹ with weights 1 − ℓ/(L+1), no
/// small-sample correction (lag 0 gives White's HC0).
Eigen::MatrixXd newey_west_covariance(const RegressionResult& fit, int lag);

/// Fills hac_se, hac_t_stats and lag_used; returns the t statistics.
Eigen::VectorXd newey_west_tstats(RegressionResult& fit, int lag);

/// coef / se, with zero se or |t| > kTStatCap mapped to ±kTStatCap (0 when coef is 0).
double capped_t(double coef, double se);

struct SpanningResult {
  RegressionResult fit;  // coefficients: alpha (monthly %), then loadings
  std::vector<std::string> factor_names;
  double alpha() const { return fit.coefficients(0); }
};

/// Regresses 100× strategy returns on 100× factor returns with Newey–West t statistics at
/// newey_west_lag(T). Every strategy date must have a factor row.
SpanningResult factor_spanning(const DatedSeries& strategy, const DatedFrame& factors);

struct PanelRegressionResult {
  std::vector<std::size_t> used_months;      // indices into the input months
  std::vector<std::size_t> excluded_months;  // rank-deficient cross sections
  std::vector<Eigen::VectorXd> monthly;      // coefficients of each used month
  Eigen::VectorXd mean;                      // time-series average
  Eigen::VectorXd t_stats;                   // Newey–West on the coefficient series
  int lag = 0;
};

/// Monthly cross-sectional OLS of dep on chars (intercept added), then time-series means
/// with Newey–West t statistics. Rank-deficient months are skipped and listed.
PanelRegressionResult cross_sectional_panel(const std::vector<Eigen::VectorXd>& dep,
                                            const std::vector<Eigen::MatrixXd>& chars);

}  // namespace crosspred
