#include <gtest/gtest.h>

#include "crosspred/error.hpp"
#include "crosspred/estimators.hpp"
#include "crosspred/synth.hpp"
#include "support.hpp"

using namespace crosspred;
namespace ts = testing_support;

namespace {

ManagedSeries<double> dgp_series(std::uint64_t seed, Eigen::Index n, int months, double b_self, double b_cross,
                                 std::vector<double> loadings = {}, bool zero_cost = false) {
  DgpSpec spec;
  spec.b = Eigen::MatrixXd::Constant(n, n, b_cross);
  spec.b.diagonal().setConstant(b_self);
  spec.sigma_s = Eigen::MatrixXd::Identity(n, n);
  spec.sigma_eps = Eigen::MatrixXd::Identity(n, n);
  spec.signal_loadings = std::move(loadings);
  spec.months = months;
  spec.seed = seed;
  const auto data = generate(spec);
  return build_managed<double>(align(data.signals, data.returns), zero_cost);
}

double value(const SdfParams<double>& p, const Eigen::MatrixXd& pi) { return p.lambda.dot(pi.transpose() * p.phi); }

}  // namespace

TEST(EstimateMr, RankOneRecoversSingularPair) {
  std::mt19937_64 rng(1);
  const Eigen::VectorXd u = ts::random_unit(rng, 9), v = ts::random_unit(rng, 3);
  const Eigen::MatrixXd pi = 2.5 * u * v.transpose();
  const auto p = estimate_mr(ts::series_from_mean(pi));
  EXPECT_NEAR(std::abs(p.lambda.dot(v)), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(p.phi.dot(u)), 1.0, 1e-12);
  EXPECT_NEAR(value(p, pi), 2.5, 1e-12);
}

TEST(EstimateMr, DiagonalEmbedded) {
  Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(4, 2);
  pi(0, 0) = 3;
  pi(1, 1) = 1;
  const auto p = estimate_mr(ts::series_from_mean(pi));
  EXPECT_NEAR(p.lambda(0), 1.0, 1e-14);
  EXPECT_NEAR(p.phi(0), 1.0, 1e-14);
  EXPECT_NEAR(p.phi.tail(3).norm(), 0.0, 1e-14);
}

TEST(EstimateMr, DominatesRandomUnitPairs) {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd pi = ts::gaussian(rng, 81, 5);
  const auto p = estimate_mr(ts::series_from_mean(pi));
  const double best = value(p, pi);
  EXPECT_NEAR(best, Eigen::JacobiSVD<Eigen::MatrixXd>(pi).singularValues()(0), 1e-10);
  for (int k = 0; k < 20000; ++k) {
    const Eigen::VectorXd a = ts::random_unit(rng, 5), b = ts::random_unit(rng, 81);
    ASSERT_LE(a.dot(pi.transpose() * b), best + 1e-12);
  }
}

TEST(EstimateMr, NormsAndSignConvention) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto series = build_managed<double>(ts::random_sample(seed, 4, 3, 40), seed % 2 == 0);
    const auto p = estimate_mr(series);
    EXPECT_NEAR(p.lambda.norm(), 1.0, 1e-10);
    EXPECT_NEAR(p.phi.norm(), 1.0, 1e-10);
    EXPECT_GE(value(p, series.mean), 0.0);
    Eigen::Index arg;
    p.lambda.cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(p.lambda(arg), 0.0);
  }
}

TEST(EstimateMr, ZeroMatrixRejected) {
  try {
    estimate_mr(ts::series_from_mean(Eigen::MatrixXd::Zero(4, 2)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ZeroMatrix);
  }
}

TEST(EstimateMr, SelfRestrictionIsDiagonal) {
  const auto series = build_managed<double>(ts::random_sample(3, 4, 2, 30), false);
  const auto p = estimate_mr(series, Restriction::Self);
  const Eigen::MatrixXd psi = p.psi();
  EXPECT_TRUE((psi - Eigen::MatrixXd(psi.diagonal().asDiagonal())).isZero(0.0));
  EXPECT_NEAR(p.phi.norm(), 1.0, 1e-10);
}

TEST(EstimateMsEigen, SingleSignalClosedForm) {
  const auto series = build_managed<double>(ts::random_sample(4, 3, 1, 200), false);
  const auto fit = estimate_ms_eigen(series.view(), estimate_mr(series));
  EXPECT_NEAR(std::abs(fit.params.lambda(0)), 1.0, 1e-14);
  // Φ ∝ Σ̂⁻¹Π̂ with the population covariance of the managed portfolios
  Eigen::MatrixXd x(series.T(), 9);
  for (Eigen::Index s = 0; s < series.T(); ++s) x.row(s) = series.per_date[static_cast<std::size_t>(s)].col(0).transpose();
  const Eigen::VectorXd mu = x.colwise().mean().transpose();
  const Eigen::MatrixXd c = x.rowwise() - mu.transpose();
  const Eigen::MatrixXd cov = c.transpose() * c / double(series.T());
  const Eigen::VectorXd oracle = cov.ldlt().solve(mu);
  EXPECT_GT(std::abs(ts::cosine(fit.params.phi, oracle)), 1.0 - 1e-9);
}

TEST(EstimateMsEigen, SharpeIsMonotoneAcrossIterations) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto series = build_managed<double>(ts::random_sample(100 + seed, 3, 3, 150), false);
    SolverOptions opt;
    opt.tol = 1e-12;
    const auto fit = estimate_ms_eigen(series.view(), estimate_mr(series), opt);
    for (std::size_t k = 1; k < fit.trace.records.size(); ++k)
      EXPECT_GE(fit.trace.records[k].sr2, fit.trace.records[k - 1].sr2 * (1 - 1e-12));
  }
}

TEST(EstimateMsEigen, FixedPointStopsAfterOneIteration) {
  const auto series = build_managed<double>(ts::random_sample(7, 3, 2, 120), false);
  SolverOptions opt;
  opt.tol = 1e-13;
  opt.max_iter = 2000;
  const auto first = estimate_ms_eigen(series.view(), estimate_mr(series), opt);
  ASSERT_TRUE(first.trace.converged);
  const auto again = estimate_ms_eigen(series.view(), first.params, SolverOptions{});
  EXPECT_EQ(again.trace.iterations, 1);
  EXPECT_LT(again.trace.records[0].delta_lambda, 1e-8);
}

TEST(EstimateMsEigen, SmallInstanceConverges) {
  const auto series = build_managed<double>(ts::random_sample(8, 2, 2, 300), false);
  const auto fit = estimate_ms_eigen(series.view(), estimate_mr(series));
  EXPECT_TRUE(fit.trace.converged);
  EXPECT_LT(fit.trace.iterations, 100);
}

TEST(EstimateMsEigen, SingularMomentSignalled) {
  // N² = 16 managed portfolios but only 10 dates: the covariance is singular
  const auto series = build_managed<double>(ts::random_sample(9, 4, 1, 10), false);
  try {
    estimate_ms_eigen(series.view(), estimate_mr(series));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SingularMoment);
  }
}

TEST(RidgeWeights, ZeroPenaltyIsOls) {
  std::mt19937_64 rng(10);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::MatrixXd x = ts::gaussian(rng, 60, 4, 0.05);
    x.array() += 0.01;
    const Eigen::VectorXd ridge = ridge_sdf_weights(x, 0.0);
    const Eigen::VectorXd ols = x.colPivHouseholderQr().solve(Eigen::VectorXd::Ones(60));
    EXPECT_LT((ridge - ols).cwiseAbs().maxCoeff(), 1e-8);
    const Eigen::VectorXd mu = x.colwise().mean().transpose();
    const Eigen::MatrixXd c = x.rowwise() - mu.transpose();
    const Eigen::VectorXd tangency = (c.transpose() * c / 60.0).ldlt().solve(mu);
    EXPECT_GT(ts::cosine(ridge, tangency), 1.0 - 1e-10);
  }
}

TEST(RidgeWeights, LargePenaltyShrinksToMeanDirection) {
  std::mt19937_64 rng(12);
  const Eigen::MatrixXd x = ts::gaussian(rng, 50, 6);
  const Eigen::VectorXd w = ridge_sdf_weights(x, 1e12);
  EXPECT_GT(ts::cosine(w, x.transpose() * Eigen::VectorXd::Ones(50)), 1.0 - 1e-8);
}

TEST(RidgeWeights, DualFormAgreesWithPrimal) {
  std::mt19937_64 rng(13);
  const Eigen::MatrixXd x = ts::gaussian(rng, 12, 30);
  Eigen::MatrixXd gram = x.transpose() * x;
  gram.diagonal().array() += 0.5;
  const Eigen::VectorXd primal = gram.ldlt().solve(x.transpose() * Eigen::VectorXd::Ones(12));
  EXPECT_LT((ridge_sdf_weights(x, 0.5) - primal).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(EstimateMsRidge, ToyConfigurationMatchesEigenPath) {
  const auto series = dgp_series(5, 9, 120, 0.1, 0.05, {1.0, 0.8, -0.5, 0.3, 0.2});
  const auto init = estimate_mr(series);
  SolverOptions opt;
  opt.tol = 1e-10;
  opt.max_iter = 5000;
  const auto eig = estimate_ms_eigen(series.view(), init, opt);
  const auto rid = estimate_ms_ridge(series.view(), 1e-6, init, opt);
  const double a = std::sqrt(in_sample_sr2(series.view(), eig.params.lambda, eig.params.phi));
  const double b = std::sqrt(in_sample_sr2(series.view(), rid.params.lambda, rid.params.phi));
  EXPECT_NEAR(b / a, 1.0, 0.01);
}

TEST(EstimateMsRidge, NormsAndRidgeRecorded) {
  const auto series = build_managed<double>(ts::random_sample(14, 4, 3, 80), true);
  const auto fit = estimate_ms_ridge(series.view(), 0.3, estimate_mr(series));
  EXPECT_NEAR(fit.params.lambda.norm(), 1.0, 1e-10);
  EXPECT_NEAR(fit.params.phi.norm(), 1.0, 1e-10);
  EXPECT_DOUBLE_EQ(fit.params.ridge, 0.3);
  EXPECT_LE(static_cast<int>(fit.trace.records.size()), SolverOptions{}.max_iter);
  if (fit.trace.converged) {
    EXPECT_LT(fit.trace.records.back().delta_lambda, 1e-8);
    EXPECT_LT(fit.trace.records.back().delta_phi, 1e-8);
  }
}

TEST(EstimateMsRidge, SelfRestrictionNeverLeaksOffDiagonal) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto series = build_managed<double>(ts::random_sample(seed, 5, 2, 60), false);
    SolverOptions opt;
    opt.restriction = Restriction::Self;
    const auto fit = estimate_ms_ridge(series.view(), 1.0, estimate_mr(series, Restriction::Self), opt);
    const Eigen::MatrixXd psi = fit.params.psi();
    for (Eigen::Index i = 0; i < 5; ++i)
      for (Eigen::Index j = 0; j < 5; ++j)
        if (i != j) EXPECT_EQ(psi(i, j), 0.0);
  }
}

TEST(EstimateMsRidge, NonConvergenceReportedNotThrown) {
  const auto series = build_managed<double>(ts::random_sample(15, 4, 3, 80), false);
  SolverOptions opt;
  opt.tol = 1e-300;
  opt.max_iter = 3;
  const auto fit = estimate_ms_ridge(series.view(), 0.1, estimate_mr(series), opt);
  EXPECT_FALSE(fit.trace.converged);
  EXPECT_EQ(fit.trace.iterations, 3);
  EXPECT_NEAR(fit.params.phi.norm(), 1.0, 1e-10);
}

TEST(EstimateMsRidge, NegativePenaltyRejected) {
  const auto series = build_managed<double>(ts::random_sample(16, 2, 1, 20), false);
  EXPECT_THROW(estimate_ms_ridge(series.view(), -1.0, estimate_mr(series)), Error);
}

TEST(CrossValidate, DefaultGridHasElevenPowers) {
  const auto g = default_ridge_grid();
  ASSERT_EQ(g.size(), 11u);
  EXPECT_DOUBLE_EQ(g.front(), 1e4);
  EXPECT_DOUBLE_EQ(g.back(), 1e-6);
}

TEST(CrossValidate, ContiguousFolds) {
  const auto f = contiguous_folds(12, 5);
  ASSERT_EQ(f.size(), 5u);
  EXPECT_EQ(f[0], std::make_pair(Index{0}, Index{3}));
  EXPECT_EQ(f[1], std::make_pair(Index{3}, Index{6}));
  EXPECT_EQ(f[2], std::make_pair(Index{6}, Index{8}));
  EXPECT_EQ(f.back().second, 12);
}

TEST(CrossValidate, SingletonGrid) {
  const auto series = build_managed<double>(ts::random_sample(17, 3, 2, 60), false);
  const auto cv = cross_validate(series.view(), {0.7}, 5);
  EXPECT_DOUBLE_EQ(cv.chosen, 0.7);
  EXPECT_EQ(cv.per_fold[0].size(), 5u);
}

TEST(CrossValidate, ChosenMaximizesMeanScoreTiesToLarger) {
  const auto series = build_managed<double>(ts::random_sample(18, 3, 2, 80), false);
  const auto cv = cross_validate(series.view(), default_ridge_grid(), 5);
  const double best = *std::max_element(cv.fold_scores.begin(), cv.fold_scores.end());
  EXPECT_EQ(cv.fold_scores[cv.chosen_index], best);
  EXPECT_EQ(cv.chosen, cv.grid[cv.chosen_index]);
  // two penalties so large that both fits sit on the shrinkage limit
  const auto tie = cross_validate(series.view(), {1e14, 1e15}, 4);
  EXPECT_NEAR(tie.fold_scores[0], tie.fold_scores[1], 1e-9);
  if (tie.fold_scores[0] == tie.fold_scores[1]) EXPECT_DOUBLE_EQ(tie.chosen, 1e15);
}

TEST(CrossValidate, BadArguments) {
  const auto series = build_managed<double>(ts::random_sample(19, 2, 1, 4), false);
  EXPECT_THROW(cross_validate(series.view(), {}, 5), Error);
  EXPECT_THROW(cross_validate(series.view(), {1.0}, 1), Error);
  EXPECT_THROW(cross_validate(series.view(), {1.0}, 5), Error);
}

TEST(CrossValidate, PenaltyWeaklyFallsWithMoreData) {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto shorter = dgp_series(1000 + seed, 4, 240, 0.3, 0.15, {1.0, 0.5});
    const auto longer = dgp_series(1000 + seed, 4, 480, 0.3, 0.15, {1.0, 0.5});
    const double a = cross_validate(shorter.view(), default_ridge_grid(), 5).chosen;
    const double b = cross_validate(longer.view(), default_ridge_grid(), 5).chosen;
    hits += b <= a;
  }
  EXPECT_GE(hits, 14) << hits << " of 20 seeds";
}
