#include "crosspred/regress.hpp"

#include <cmath>

#include "crosspred/error.hpp"

namespace crosspred {

RegressionResult ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, bool add_intercept) {
  const Eigen::Index t = y.size();
  if (x.rows() != t && !(x.cols() == 0 && add_intercept))
    throw Error(Errc::DimensionMismatch, "y and X have different row counts");
  RegressionResult fit;
  fit.has_intercept = add_intercept;
  fit.n_obs = t;
  if (add_intercept) {
    fit.design.resize(t, x.cols() + 1);
    fit.design.col(0).setOnes();
    if (x.cols() > 0) fit.design.rightCols(x.cols()) = x;
  } else {
    fit.design = x;
  }
  const Eigen::Index p = fit.design.cols();
  if (p == 0) throw Error(Errc::RankDeficient, "no regressors");
  if (t <= p) throw Error(Errc::RankDeficient, "need more observations (" + std::to_string(t) + ") than regressors (" +
                                                   std::to_string(p) + ")");

  const Eigen::VectorXd norms = fit.design.colwise().norm();
  if (norms.minCoeff() <= 0) throw Error(Errc::RankDeficient, "a regressor column is identically zero");
  const Eigen::MatrixXd scaled = fit.design * norms.cwiseInverse().asDiagonal();
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(scaled).singularValues();
  if (!(sv(p - 1) > 0) || sv(0) / sv(p - 1) > 1e10)
    throw Error(Errc::RankDeficient, "design is numerically rank deficient");

  fit.coefficients = fit.design.colPivHouseholderQr().solve(y);
  fit.residuals = y - fit.design * fit.coefficients;
  const Eigen::MatrixXd xtx_inv = (fit.design.transpose() * fit.design).inverse();
  const double s2 = fit.residuals.squaredNorm() / static_cast<double>(t - p);
  fit.ols_se = (s2 * xtx_inv.diagonal()).cwiseSqrt();
  return fit;
}

int newey_west_lag(Eigen::Index n_obs) {
  if (n_obs < 1) throw Error(Errc::TooShort, "lag rule needs T >= 1");
  return static_cast<int>(std::floor(4.0 * std::pow(static_cast<double>(n_obs) / 100.0, 2.0 / 9.0)));
}

Eigen::MatrixXd newey_west_covariance(const RegressionResult& fit, int lag) {
  const Eigen::Index t = fit.n_obs;
  if (lag < 0 || lag >= t) throw Error(Errc::Config, "Newey-West lag must lie in [0, T)");
  const Eigen::MatrixXd& x = fit.design;
  const Eigen::MatrixXd scores = x.array().colwise() * fit.residuals.array();  // row t = u_t x_t'
  Eigen::MatrixXd meat = scores.transpose() * scores;
  for (int l = 1; l <= lag; ++l) {
    const double w = 1.0 - static_cast<double>(l) / static_cast<double>(lag + 1);
    const Eigen::MatrixXd gamma = scores.bottomRows(t - l).transpose() * scores.topRows(t - l);
    meat += w * (gamma + gamma.transpose());
  }
  const Eigen::MatrixXd bread = (x.transpose() * x).inverse();
  return bread * meat * bread;
}

double capped_t(double coef, double se) {
  if (coef == 0.0) return 0.0;
  if (!(se > 0) || std::abs(coef / se) > kTStatCap) return std::copysign(kTStatCap, coef);
  return coef / se;
}

Eigen::VectorXd newey_west_tstats(RegressionResult& fit, int lag) {
  const Eigen::MatrixXd cov = newey_west_covariance(fit, lag);
  fit.hac_se = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  fit.hac_t_stats.resize(fit.coefficients.size());
  for (Eigen::Index k = 0; k < fit.coefficients.size(); ++k)
    fit.hac_t_stats(k) = capped_t(fit.coefficients(k), fit.hac_se(k));
  fit.lag_used = lag;
  return fit.hac_t_stats;
}

SpanningResult factor_spanning(const DatedSeries& strategy, const DatedFrame& factors) {
  if (strategy.size() == 0) throw Error(Errc::DateMisalignment, "empty strategy series");
  const Eigen::Index t = static_cast<Eigen::Index>(strategy.size());
  Eigen::VectorXd y(t);
  Eigen::MatrixXd x(t, factors.values.cols());
  for (Eigen::Index k = 0; k < t; ++k) {
    const auto row = factors.row_of(strategy.dates[k]);
    if (!row) throw Error(Errc::DateMisalignment, "no factor returns for " + strategy.dates[k].str());
    y(k) = 100.0 * strategy.values[k];
    x.row(k) = 100.0 * factors.values.row(*row);
  }
  SpanningResult res;
  res.factor_names = factors.columns;
  res.fit = ols(y, x);
  newey_west_tstats(res.fit, newey_west_lag(t));
  return res;
}

PanelRegressionResult cross_sectional_panel(const std::vector<Eigen::VectorXd>& dep,
                                            const std::vector<Eigen::MatrixXd>& chars) {
  if (dep.size() != chars.size()) throw Error(Errc::DimensionMismatch, "dep and chars cover different months");
  PanelRegressionResult res;
  for (std::size_t m = 0; m < dep.size(); ++m) {
    try {
      res.monthly.push_back(ols(dep[m], chars[m]).coefficients);
      res.used_months.push_back(m);
    } catch (const Error& e) {
      if (e.code() != Errc::RankDeficient) throw;
      res.excluded_months.push_back(m);
    }
  }
  if (res.monthly.size() < 2)
    throw Error(Errc::AllMonthsRankDeficient, std::to_string(res.monthly.size()) + " usable months of " +
                                                  std::to_string(dep.size()));
  const Eigen::Index n = static_cast<Eigen::Index>(res.monthly.size());
  const Eigen::Index k = res.monthly.front().size();
  Eigen::MatrixXd series(n, k);
  for (Eigen::Index r = 0; r < n; ++r) series.row(r) = res.monthly[static_cast<std::size_t>(r)].transpose();
  res.mean = series.colwise().mean().transpose();
  res.lag = newey_west_lag(n);
  res.t_stats.resize(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    RegressionResult fit = ols(series.col(c), Eigen::MatrixXd(n, 0));
    res.t_stats(c) = newey_west_tstats(fit, std::min<int>(res.lag, static_cast<int>(n) - 1))(0);
  }
  return res;
}

}  // namespace crosspred
