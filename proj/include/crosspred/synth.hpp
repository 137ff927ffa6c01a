#pragma once

// Synthetic panels from r_{t+1} = B S_t + ε_{t+1} and the closed-form Φ directions that
// the two objectives target under it (single signal):
//
//   Π = E[Π_s] = vec(BΣ_S)          (column-major vec; row i·N + j ↔ E[r_j S_i])
//   MR:  Φ ∝ vec(BΣ_S)              B = unvec(Φ) Σ_S⁻¹
//   MS:  Φ ∝ Σ_Λ⁻¹ vec(BΣ_S)        B = unvec(Σ_Λ Φ) Σ_S⁻¹
//
// Σ_Λ = Cov(Π_s). With Gaussian signals, Isserlis' theorem gives
//   Cov(r_j S_i, r_l S_k) = (BΣ_SB' + Σ_ε)(j, l) Σ_S(i, k) + (BΣ_S)(j, k) (BΣ_S)(l, i).

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crosspred/config.hpp"
#include "crosspred/month.hpp"
#include "crosspred/panel.hpp"
#include "crosspred/types.hpp"

namespace crosspred {

struct DgpSpec {
  Eigen::MatrixXd b;          // N×N slope matrix
  Eigen::MatrixXd sigma_s;    // signal covariance (each signal column drawn independently)
  Eigen::MatrixXd sigma_eps;  // innovation covariance
  // Multi-signal extension: signal m enters with slope loading_m · B. Empty means M = 1.
  std::vector<double> signal_loadings;
  int months = 120;  // number of (S_t, r_{t+1}) pairs
  std::uint64_t seed = 1;
  MonthStamp start{2000, 1};

  Index n_assets() const { return b.rows(); }
  Index n_signals() const { return signal_loadings.empty() ? 1 : static_cast<Index>(signal_loadings.size()); }
  bool null_predictability() const { return b.cwiseAbs().maxCoeff() == 0.0; }
};

struct SyntheticData {
  SignalPanel signals;  // not standardized
  ReturnPanel returns;
};

/// Throws NotPsd unless `m` is square, symmetric and positive semidefinite.
void check_psd(const Eigen::MatrixXd& m, const std::string& name);

/// Draws the panels. Signals and innovations use separate generator streams derived from
/// the seed (stream 1 and stream 2), so either can be regenerated on its own.
SyntheticData generate(const DgpSpec& spec);

/// Σ_Λ = Cov(Π_s) for one Gaussian signal, from the Isserlis formula above.
Eigen::MatrixXd analytic_sigma_lambda(const DgpSpec& spec);

/// Σ_Λ estimated from a long simulated sample; the empirical counterpart of the above.
Eigen::MatrixXd empirical_sigma_lambda(const DgpSpec& spec, int months = 100000);

/// Unit-norm oracle direction for the objective. For MaxSharpe, `sigma_lambda` must be invertible.
Eigen::VectorXd oracle_phi(const DgpSpec& spec, Objective objective, const Eigen::MatrixXd& sigma_lambda);

struct RecoveredB {
  Eigen::MatrixXd b;  // unit Frobenius norm
  double scale = 0;   // Frobenius norm before normalization
};

RecoveredB recover_b(const Eigen::VectorXd& phi, const Eigen::MatrixXd& sigma_lambda, const Eigen::MatrixXd& sigma_s,
                     Objective objective);

struct OracleSolution {
  Eigen::VectorXd phi_mr;
  Eigen::VectorXd phi_ms;
  Eigen::MatrixXd b_recovered;  // from phi_ms
  bool empirical = false;       // Σ_Λ was simulated rather than analytic
};

/// Both oracle directions; Σ_Λ is analytic for a single signal, simulated otherwise.
OracleSolution oracle_solution(const DgpSpec& spec);

/// Keys: n_assets, months, seed, start, b | (b_self, b_cross), sigma_s | sigma_s_diag,
/// sigma_eps | sigma_eps_diag, signal_loadings. Matrices are nested lists.
DgpSpec load_dgp_spec(const std::filesystem::path& path);
DgpSpec dgp_spec_from_config(const KeyValueConfig& cfg);

}  // namespace crosspred
