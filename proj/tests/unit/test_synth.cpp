#include <gtest/gtest.h>

#include "crosspred/error.hpp"
#include "crosspred/synth.hpp"
#include "support.hpp"

using namespace crosspred;
namespace ts = testing_support;

namespace {

DgpSpec diagonal_spec(Eigen::Index n, int months, std::uint64_t seed) {
  DgpSpec spec;
  std::mt19937_64 rng(seed + 1000);
  spec.b = ts::gaussian(rng, n, n, 0.2);
  spec.sigma_s = Eigen::VectorXd::LinSpaced(n, 0.5, 2.0).asDiagonal();
  spec.sigma_eps = Eigen::VectorXd::LinSpaced(n, 1.0, 3.0).asDiagonal();
  spec.months = months;
  spec.seed = seed;
  return spec;
}

Eigen::VectorXd flat(const Eigen::MatrixXd& m) { return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()); }

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Config;
}

}  // namespace

TEST(Generate, ShapesAndDates) {
  const auto d = generate(diagonal_spec(4, 30, 1));
  EXPECT_EQ(d.signals.dates.size(), 30u);
  EXPECT_EQ(d.returns.dates.size(), 30u);
  EXPECT_EQ(months_between(d.signals.dates.front(), d.returns.dates.front()), 1);
  EXPECT_FALSE(d.signals.standardized);
  EXPECT_EQ(align(d.signals, d.returns).T(), 30);
}

TEST(Generate, FixedSeedIsBitIdentical) {
  const auto a = generate(diagonal_spec(3, 50, 9)), b = generate(diagonal_spec(3, 50, 9));
  for (std::size_t t = 0; t < 50; ++t) {
    EXPECT_EQ(a.signals.values[t], b.signals.values[t]);
    EXPECT_EQ(a.returns.values[t], b.returns.values[t]);
  }
  const auto c = generate(diagonal_spec(3, 50, 10));
  EXPECT_NE(a.returns.values[0], c.returns.values[0]);
}

TEST(Generate, NoiselessIdentity) {
  DgpSpec spec = diagonal_spec(3, 20, 2);
  spec.b = Eigen::MatrixXd::Identity(3, 3);
  spec.sigma_eps = Eigen::MatrixXd::Zero(3, 3);
  const auto d = generate(spec);
  for (std::size_t t = 0; t < 20; ++t) EXPECT_LT((d.returns.values[t] - d.signals.values[t].col(0)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Generate, NullPredictabilityHasNoCorrelation) {
  DgpSpec spec = diagonal_spec(5, 2000, 3);
  spec.b.setZero();
  EXPECT_TRUE(spec.null_predictability());
  const auto d = generate(spec);
  const auto a = align(d.signals, d.returns);
  const double bound = 3.0 / std::sqrt(2000.0);
  for (Eigen::Index i = 0; i < 5; ++i) {
    Eigen::VectorXd s(a.T()), r(a.T());
    for (Eigen::Index t = 0; t < a.T(); ++t) {
      s(t) = a.pairs[static_cast<std::size_t>(t)].signals(i, 0);
      r(t) = a.pairs[static_cast<std::size_t>(t)].returns(i);
    }
    const Eigen::VectorXd sc = s.array() - s.mean(), rc = r.array() - r.mean();
    EXPECT_LT(std::abs(sc.dot(rc) / (sc.norm() * rc.norm())), bound);
  }
}

TEST(Generate, NonPsdCovarianceRejected) {
  DgpSpec spec = diagonal_spec(2, 10, 4);
  spec.sigma_eps << 1, 2, 2, 1;
  EXPECT_EQ(code_of([&] { generate(spec); }), Errc::NotPsd);
}

TEST(SigmaLambda, AnalyticMatchesSimulation) {
  DgpSpec spec = diagonal_spec(3, 10, 5);
  spec.sigma_s(0, 1) = spec.sigma_s(1, 0) = 0.3;  // the closed form also covers correlated signals
  const Eigen::MatrixXd a = analytic_sigma_lambda(spec);
  const Eigen::MatrixXd e = empirical_sigma_lambda(spec, 200000);
  EXPECT_LT((a - e).cwiseAbs().maxCoeff() / a.cwiseAbs().maxCoeff(), 0.03);
  EXPECT_LT((a - a.transpose()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(OraclePhi, WhitenedCaseAgrees) {
  const auto spec = diagonal_spec(3, 10, 6);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(9, 9);
  EXPECT_LT((oracle_phi(spec, Objective::MaxSharpe, id) - oracle_phi(spec, Objective::MaxReturn, id)).norm(), 1e-14);
}

TEST(OraclePhi, RankOneSlope) {
  std::mt19937_64 rng(7);
  DgpSpec spec = diagonal_spec(4, 10, 7);
  const Eigen::VectorXd u = ts::gaussian(rng, 4, 1), v = ts::gaussian(rng, 4, 1);
  spec.b = u * v.transpose();
  spec.sigma_s = Eigen::MatrixXd::Identity(4, 4);
  const Eigen::VectorXd phi = oracle_phi(spec, Objective::MaxReturn, analytic_sigma_lambda(spec));
  const Eigen::VectorXd expect = flat(spec.b) / spec.b.norm();
  EXPECT_GT(std::abs(phi.dot(expect)), 1 - 1e-14);
  EXPECT_NEAR(phi.norm(), 1.0, 1e-14);
}

TEST(OraclePhi, ScalarCase) {
  DgpSpec spec = diagonal_spec(1, 10, 8);
  spec.b(0, 0) = 0.4;
  for (auto obj : {Objective::MaxReturn, Objective::MaxSharpe})
    EXPECT_NEAR(std::abs(oracle_phi(spec, obj, analytic_sigma_lambda(spec))(0)), 1.0, 1e-15);
}

TEST(OraclePhi, SingularCovarianceRejected) {
  const auto spec = diagonal_spec(2, 10, 9);
  EXPECT_EQ(code_of([&] { oracle_phi(spec, Objective::MaxSharpe, Eigen::MatrixXd::Zero(4, 4)); }),
            Errc::SingularCovariance);
}

TEST(OraclePhi, ObjectivesDifferUnlessWhitened) {
  const auto spec = diagonal_spec(4, 10, 10);
  const Eigen::MatrixXd sl = analytic_sigma_lambda(spec);
  const double c = oracle_phi(spec, Objective::MaxReturn, sl).dot(oracle_phi(spec, Objective::MaxSharpe, sl));
  EXPECT_LT(std::abs(c), 0.99);
}

TEST(RecoverB, RoundTripBothObjectives) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto spec = diagonal_spec(3 + Eigen::Index(seed % 2), 10, seed);
    const Eigen::MatrixXd sl = analytic_sigma_lambda(spec);
    const Eigen::VectorXd truth = flat(spec.b);
    for (auto obj : {Objective::MaxReturn, Objective::MaxSharpe}) {
      const auto rec = recover_b(oracle_phi(spec, obj, sl), sl, spec.sigma_s, obj);
      EXPECT_GT(ts::cosine(flat(rec.b), truth), 1 - 1e-8);
      EXPECT_NEAR(rec.b.norm(), 1.0, 1e-12);
      EXPECT_GT(rec.scale, 0.0);
    }
  }
}

TEST(RecoverB, WhitenedIsDirectUnvec) {
  std::mt19937_64 rng(11);
  const Eigen::VectorXd phi = ts::random_unit(rng, 9);
  const Eigen::MatrixXd id3 = Eigen::MatrixXd::Identity(3, 3), id9 = Eigen::MatrixXd::Identity(9, 9);
  const auto rec = recover_b(phi, id9, id3, Objective::MaxSharpe);
  EXPECT_LT((flat(rec.b) - phi).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(RecoverB, ScaleInvariantDirection) {
  auto spec = diagonal_spec(3, 10, 12);
  const Eigen::MatrixXd sl = analytic_sigma_lambda(spec);
  const auto a = recover_b(oracle_phi(spec, Objective::MaxReturn, sl), sl, spec.sigma_s, Objective::MaxReturn);
  spec.b *= 5.0;
  const auto b = recover_b(oracle_phi(spec, Objective::MaxReturn, analytic_sigma_lambda(spec)), sl, spec.sigma_s,
                           Objective::MaxReturn);
  EXPECT_LT((a.b - b.b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DgpSpecFile, KeysAndDefaults) {
  auto dir = ts::temp_dir("dgp");
  auto path = ts::write_file(dir / "dgp.cfg",
                             "n_assets = 3\nb_self = 0.2\nb_cross = 0.05\nsigma_eps_diag = 0.5\n"
                             "signal_loadings = [1, 0.5]\nmonths = 40\nseed = 17\nstart = 1990-06\n");
  const auto spec = load_dgp_spec(path);
  EXPECT_EQ(spec.n_assets(), 3);
  EXPECT_EQ(spec.n_signals(), 2);
  EXPECT_DOUBLE_EQ(spec.b(0, 0), 0.2);
  EXPECT_DOUBLE_EQ(spec.b(0, 1), 0.05);
  EXPECT_DOUBLE_EQ(spec.sigma_eps(1, 1), 0.5);
  EXPECT_DOUBLE_EQ(spec.sigma_s(2, 2), 1.0);
  EXPECT_EQ(spec.seed, 17u);
  EXPECT_EQ(spec.start.str(), "1990-06");
  auto bad = ts::write_file(dir / "bad.cfg", "b = [[1, 0], [0, 1]]\nsigma_s = [[1, 2], [2, 1]]\n");
  EXPECT_EQ(code_of([&] { load_dgp_spec(bad); }), Errc::NotPsd);
}

TEST(OracleSolution, MultiSignalIsFlaggedEmpirical) {
  DgpSpec spec = diagonal_spec(2, 10, 13);
  spec.signal_loadings = {1.0, 0.5};
  const auto o = oracle_solution(spec);
  EXPECT_TRUE(o.empirical);
  EXPECT_NEAR(o.phi_ms.norm(), 1.0, 1e-12);
  EXPECT_FALSE(oracle_solution(diagonal_spec(2, 10, 13)).empirical);
}
