#include "crosspred/synth.hpp"

#include <random>

#include "crosspred/config.hpp"
#include "crosspred/error.hpp"

namespace crosspred {
namespace {

constexpr std::uint64_t kSignalStream = 1;
constexpr std::uint64_t kNoiseStream = 2;

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return std::mt19937_64(seq);
}

// Symmetric square root-like factor L with L L' = m for PSD m.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

Eigen::VectorXd col_vec(const Eigen::MatrixXd& m) { return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()); }

Eigen::MatrixXd col_unvec(const Eigen::VectorXd& v, Index n) { return Eigen::Map<const Eigen::MatrixXd>(v.data(), n, n); }

void check_spec(const DgpSpec& spec) {
  const Index n = spec.n_assets();
  if (n < 1 || spec.b.cols() != n) throw Error(Errc::Config, "B must be square");
  if (spec.sigma_s.rows() != n || spec.sigma_eps.rows() != n)
    throw Error(Errc::Config, "covariances must be " + std::to_string(n) + "x" + std::to_string(n));
  if (spec.months < 1) throw Error(Errc::Config, "months must be positive");
  check_psd(spec.sigma_s, "sigma_s");
  check_psd(spec.sigma_eps, "sigma_eps");
}

Eigen::MatrixXd invert_spd(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-14))
    throw Error(Errc::SingularCovariance, std::string(what) + " is singular");
  return ldlt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
}

}  // namespace

void check_psd(const Eigen::MatrixXd& m, const std::string& name) {
  if (m.rows() != m.cols()) throw Error(Errc::NotPsd, name + " is not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) throw Error(Errc::NotPsd, name + " is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10 * scale)
    throw Error(Errc::NotPsd, name + " has a negative eigenvalue " + std::to_string(es.eigenvalues().minCoeff()));
}

SyntheticData generate(const DgpSpec& spec) {
  check_spec(spec);
  const Index n = spec.n_assets(), m = spec.n_signals();
  const Eigen::MatrixXd ls = psd_factor(spec.sigma_s), le = psd_factor(spec.sigma_eps);
  auto sig_rng = stream(spec.seed, kSignalStream);
  auto eps_rng = stream(spec.seed, kNoiseStream);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](std::mt19937_64& rng) {
    Eigen::VectorXd z(n);
    for (Index i = 0; i < n; ++i) z(i) = normal(rng);
    return z;
  };

  SyntheticData out;
  for (Index i = 0; i < n; ++i) {
    out.signals.assets.push_back("A" + std::to_string(i + 1));
    out.returns.assets.push_back("A" + std::to_string(i + 1));
  }
  for (Index k = 0; k < m; ++k) out.signals.signals.push_back("s" + std::to_string(k + 1));

  for (int t = 0; t < spec.months; ++t) {
    Eigen::MatrixXd s(n, m);
    for (Index k = 0; k < m; ++k) s.col(k) = ls * draw(sig_rng);
    Eigen::VectorXd r = le * draw(eps_rng);
    for (Index k = 0; k < m; ++k) {
      const double loading = spec.signal_loadings.empty() ? 1.0 : spec.signal_loadings[static_cast<std::size_t>(k)];
      r += loading * (spec.b * s.col(k));
    }
    out.signals.dates.push_back(spec.start.plus_months(t));
    out.signals.values.push_back(std::move(s));
    out.returns.dates.push_back(spec.start.plus_months(t + 1));
    out.returns.values.push_back(std::move(r));
  }
  return out;
}

Eigen::MatrixXd analytic_sigma_lambda(const DgpSpec& spec) {
  check_spec(spec);
  if (spec.n_signals() != 1) throw Error(Errc::Config, "analytic Σ_Λ covers the single-signal process only");
  const Index n = spec.n_assets();
  const Eigen::MatrixXd bs = spec.b * spec.sigma_s;
  const Eigen::MatrixXd rr = spec.b * spec.sigma_s * spec.b.transpose() + spec.sigma_eps;
  Eigen::MatrixXd out(n * n, n * n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      for (Index k = 0; k < n; ++k)
        for (Index l = 0; l < n; ++l)
          out(i * n + j, k * n + l) = rr(j, l) * spec.sigma_s(i, k) + bs(j, k) * bs(l, i);
  return out;
}

Eigen::MatrixXd empirical_sigma_lambda(const DgpSpec& spec, int months) {
  DgpSpec big = spec;
  big.months = months;
  const auto data = generate(big);
  const Index n = spec.n_assets(), m = spec.n_signals(), dim = n * n * m;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(dim, dim);
  for (int t = 0; t < months; ++t) {
    const auto& s = data.signals.values[static_cast<std::size_t>(t)];
    const auto& r = data.returns.values[static_cast<std::size_t>(t)];
    Eigen::VectorXd x(dim);
    // vec(Π_s): column k of Π_s stacked, row i·N + j = r_j S_{ik}.
    for (Index k = 0; k < m; ++k)
      for (Index i = 0; i < n; ++i) x.segment(k * n * n + i * n, n) = r * s(i, k);
    mean += x;
    second.selfadjointView<Eigen::Lower>().rankUpdate(x);
  }
  mean /= months;
  Eigen::MatrixXd cov = second.selfadjointView<Eigen::Lower>();
  cov /= months;
  cov -= mean * mean.transpose();
  return cov;
}

Eigen::VectorXd oracle_phi(const DgpSpec& spec, Objective objective, const Eigen::MatrixXd& sigma_lambda) {
  const Eigen::VectorXd pi = col_vec(spec.b * spec.sigma_s);
  if (objective == Objective::MaxReturn) {
    const double norm = pi.norm();
    if (norm == 0.0) throw Error(Errc::ZeroMatrix, "BΣ_S is zero");
    return pi / norm;
  }
  if (sigma_lambda.rows() != pi.size() || sigma_lambda.cols() != pi.size())
    throw Error(Errc::DimensionMismatch, "Σ_Λ must be N²×N²");
  Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma_lambda);
  if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-14) || !ldlt.isPositive())
    throw Error(Errc::SingularCovariance, "Σ_Λ is singular");
  const Eigen::VectorXd dir = ldlt.solve(pi);
  const double norm = dir.norm();
  if (norm == 0.0) throw Error(Errc::ZeroMatrix, "BΣ_S is zero");
  return dir / norm;
}

RecoveredB recover_b(const Eigen::VectorXd& phi, const Eigen::MatrixXd& sigma_lambda, const Eigen::MatrixXd& sigma_s,
                     Objective objective) {
  const Index n = sigma_s.rows();
  if (phi.size() != n * n) throw Error(Errc::DimensionMismatch, "Φ must have N² entries");
  const Eigen::MatrixXd s_inv = invert_spd(sigma_s, "Σ_S");
  const Eigen::VectorXd v = objective == Objective::MaxSharpe ? Eigen::VectorXd(sigma_lambda * phi) : phi;
  RecoveredB out;
  out.b = col_unvec(v, n) * s_inv;
  out.scale = out.b.norm();
  if (out.scale > 0) out.b /= out.scale;
  return out;
}

OracleSolution oracle_solution(const DgpSpec& spec) {
  OracleSolution out;
  Eigen::MatrixXd sl;
  if (spec.n_signals() == 1) {
    sl = analytic_sigma_lambda(spec);
  } else {
    // Single-signal formulas applied to the signal-1 block of a simulated Σ_Λ.
    const Index n2 = spec.n_assets() * spec.n_assets();
    sl = empirical_sigma_lambda(spec).topLeftCorner(n2, n2);
    out.empirical = true;
  }
  out.phi_mr = oracle_phi(spec, Objective::MaxReturn, sl);
  out.phi_ms = oracle_phi(spec, Objective::MaxSharpe, sl);
  out.b_recovered = recover_b(out.phi_ms, sl, spec.sigma_s, Objective::MaxSharpe).b;
  return out;
}

DgpSpec load_dgp_spec(const std::filesystem::path& path) { return dgp_spec_from_config(KeyValueConfig::load(path)); }

DgpSpec dgp_spec_from_config(const KeyValueConfig& cfg) {
  DgpSpec spec;
  const auto n = static_cast<Index>(cfg.get_int("n_assets", 0));
  if (auto b = cfg.get("b")) {
    spec.b = parse_matrix(*b, "b");
  } else {
    if (n < 1) throw Error(Errc::Config, "DGP spec: need b or n_assets with b_self/b_cross");
    spec.b = Eigen::MatrixXd::Constant(n, n, cfg.get_double("b_cross", 0.0));
    spec.b.diagonal().setConstant(cfg.get_double("b_self", 0.0));
  }
  const Index dim = spec.b.rows();
  if (n > 0 && n != dim) throw Error(Errc::Config, "n_assets disagrees with b");
  auto matrix_or_diag = [&](const std::string& key, double fallback) {
    if (auto v = cfg.get(key)) return parse_matrix(*v, key);
    Eigen::MatrixXd d = Eigen::MatrixXd::Identity(dim, dim) * cfg.get_double(key + "_diag", fallback);
    return d;
  };
  spec.sigma_s = matrix_or_diag("sigma_s", 1.0);
  spec.sigma_eps = matrix_or_diag("sigma_eps", 1.0);
  if (auto l = cfg.get("signal_loadings")) spec.signal_loadings = parse_list(*l, "signal_loadings");
  spec.months = static_cast<int>(cfg.get_int("months", 120));
  spec.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  if (auto s = cfg.get("start")) spec.start = MonthStamp::parse(*s);
  check_spec(spec);
  return spec;
}

}  // namespace crosspred
