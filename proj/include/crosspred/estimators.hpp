#pragma once

// Estimators for the signal weights Λ (length M) and the spillover vector Φ = vec(Ψ')
// (length N²), both held to unit Euclidean norm.
//
//   estimate_mr        expected-return maximizer: leading singular pair of the mean Π.
//   estimate_ms_eigen  Sharpe maximizer by alternating generalized eigenproblems
//                      (exact, small problems only).
//   estimate_ms_ridge  Sharpe maximizer by alternating ridge regressions of a vector of
//                      ones on the managed portfolios χ_Λ and χ_Φ.
//   cross_validate     contiguous k-fold selection of the ridge penalty.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "crosspred/error.hpp"
#include "crosspred/managed.hpp"
#include "crosspred/types.hpp"

namespace crosspred {

template <typename Scalar = double>
struct SdfParams {
  Vec<Scalar> lambda;
  Vec<Scalar> phi;
  Objective objective = Objective::MaxSharpe;
  Restriction restriction = Restriction::Cross;
  Scalar ridge = 0;

  Mat<Scalar> psi() const { return unvec_transpose(phi); }
};

template <typename Scalar = double>
struct IterationRecord {
  Scalar sr2 = 0;           // in-sample squared Sharpe ratio after the iteration
  Scalar delta_lambda = 0;  // ‖ΔΛ‖∞
  Scalar delta_phi = 0;     // ‖ΔΦ‖∞
};

template <typename Scalar = double>
struct IterationTrace {
  std::vector<IterationRecord<Scalar>> records;
  bool converged = false;
  int iterations = 0;
};

template <typename Scalar = double>
struct MsFit {
  SdfParams<Scalar> params;
  IterationTrace<Scalar> trace;
};

struct SolverOptions {
  double tol = 1e-8;
  int max_iter = 500;
  Restriction restriction = Restriction::Cross;
};

/// Penalties 10^4, 10^3, ..., 10^-6.
inline std::vector<double> default_ridge_grid() {
  std::vector<double> grid;
  for (int x = 4; x >= -6; --x) grid.push_back(std::pow(10.0, x));
  return grid;
}

/// Squared Sharpe ratio of a return series, moments with divisor T.
template <typename Derived>
typename Derived::Scalar squared_sharpe(const Eigen::MatrixBase<Derived>& pi) {
  using Scalar = typename Derived::Scalar;
  const Scalar mu = pi.mean();
  const Scalar var = (pi.array() - mu).square().mean();
  if (var <= Scalar(0)) return mu == Scalar(0) ? Scalar(0) : std::numeric_limits<Scalar>::infinity();
  return mu * mu / var;
}

template <typename Scalar, typename DL, typename DP>
Scalar in_sample_sr2(const ManagedView<Scalar>& view, const Eigen::MatrixBase<DL>& lambda,
                     const Eigen::MatrixBase<DP>& phi) {
  return squared_sharpe(strategy_returns(view, lambda, phi));
}

/// Unnormalized ridge SDF coefficients (X'X + ridge·I)⁻¹X'1. When X has more columns than
/// rows the equivalent dual form X'(XX' + ridge·I)⁻¹1 is used. A singular or badly
/// conditioned system falls back to the minimum-norm least-squares solution.
template <typename Derived>
Vec<typename Derived::Scalar> ridge_sdf_weights(const Eigen::MatrixBase<Derived>& x, double ridge) {
  using Scalar = typename Derived::Scalar;
  const Index t = x.rows(), k = x.cols();
  const Vec<Scalar> ones = Vec<Scalar>::Ones(t);
  const auto min_rcond = Scalar(1e-13);
  if (k <= t) {
    Mat<Scalar> gram = x.transpose() * x;
    gram.diagonal().array() += Scalar(ridge);
    Eigen::LLT<Mat<Scalar>> llt(gram);
    if (llt.info() == Eigen::Success && llt.rcond() > min_rcond) return llt.solve(x.transpose() * ones);
  } else {
    Mat<Scalar> gram = x * x.transpose();
    gram.diagonal().array() += Scalar(ridge);
    Eigen::LLT<Mat<Scalar>> llt(gram);
    if (llt.info() == Eigen::Success && llt.rcond() > min_rcond) return x.transpose() * llt.solve(ones);
  }
  if (ridge > 0) {
    // Ill-conditioned even with the penalty: stacked least squares [X; √λ I] b = [1; 0].
    Mat<Scalar> stacked(t + k, k);
    stacked << x, Mat<Scalar>::Identity(k, k) * Scalar(std::sqrt(ridge));
    Vec<Scalar> rhs = Vec<Scalar>::Zero(t + k);
    rhs.head(t).setOnes();
    return stacked.completeOrthogonalDecomposition().solve(rhs);
  }
  return x.completeOrthogonalDecomposition().solve(ones);
}

namespace detail {

template <typename Scalar>
Scalar max_abs_diff(const Vec<Scalar>& a, const Vec<Scalar>& b) {
  if (a.size() != b.size()) return std::numeric_limits<Scalar>::infinity();
  return (a - b).cwiseAbs().maxCoeff();
}

template <typename Scalar>
Vec<Scalar> unit(Vec<Scalar> v, const char* what) {
  const Scalar norm = v.norm();
  if (!(norm > Scalar(0)) || !std::isfinite(static_cast<double>(norm)))
    throw Error(Errc::ZeroMatrix, std::string("degenerate ") + what + " update");
  return v / norm;
}

// Orients a direction so the managed portfolios it weights have a nonnegative mean.
template <typename Scalar>
void orient(Vec<Scalar>& w, const Mat<Scalar>& x) {
  if ((x.colwise().mean() * w)(0) < Scalar(0)) w = -w;
}

template <typename Scalar>
Mat<Scalar> select_columns(const Mat<Scalar>& x, const std::vector<Index>& cols) {
  Mat<Scalar> out(x.rows(), static_cast<Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Index>(c)) = x.col(cols[c]);
  return out;
}

template <typename Scalar>
Vec<Scalar> embed(const Vec<Scalar>& sub, const std::vector<Index>& positions, Index size) {
  Vec<Scalar> out = Vec<Scalar>::Zero(size);
  for (std::size_t c = 0; c < positions.size(); ++c) out(positions[c]) = sub(static_cast<Index>(c));
  return out;
}

// Principal generalized eigenvector of (μμ', Σ) for the managed portfolios X, Σ with divisor T.
template <typename Scalar>
Vec<Scalar> rayleigh_step(const Mat<Scalar>& x) {
  const Vec<Scalar> mu = x.colwise().mean().transpose();
  const Mat<Scalar> centered = x.rowwise() - mu.transpose();
  const Mat<Scalar> cov = centered.transpose() * centered / Scalar(x.rows());
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> spectrum(cov, Eigen::EigenvaluesOnly);
  const Scalar lo = spectrum.eigenvalues().minCoeff(), hi = spectrum.eigenvalues().maxCoeff();
  if (!(lo > Scalar(0)) || hi / lo > Scalar(1e12))
    throw Error(Errc::SingularMoment, "moment matrix condition estimate exceeds 1e12; use the ridge path");
  const Mat<Scalar> a = mu * mu.transpose();
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat<Scalar>> ges(a, cov);
  if (ges.info() != Eigen::Success) throw Error(Errc::SingularMoment, "generalized eigensolver failed");
  return ges.eigenvectors().col(x.cols() - 1);
}

// Sign convention: Λ'Π'Φ ≥ 0, then the joint sign so that Λ's largest-magnitude entry is positive.
template <typename Scalar>
void canonicalize(SdfParams<Scalar>& p, const Mat<Scalar>& mean) {
  if ((p.lambda.transpose() * mean.transpose() * p.phi)(0) < Scalar(0)) p.phi = -p.phi;
  Index arg = 0;
  p.lambda.cwiseAbs().maxCoeff(&arg);
  if (p.lambda(arg) < Scalar(0)) {
    p.lambda = -p.lambda;
    p.phi = -p.phi;
  }
}

// Alternates Φ ← step(χ_Λ), Λ ← step(χ_Φ) with unit-norm rescaling after each half-step.
template <typename Scalar, typename Step>
MsFit<Scalar> alternate(const ManagedView<Scalar>& view, const SdfParams<Scalar>& init,
                        const SolverOptions& opt, Step&& step) {
  if (view.T() < 2) throw Error(Errc::TooShort, "Sharpe estimation needs T >= 2");
  if (init.lambda.size() != view.n_signals())
    throw Error(Errc::DimensionMismatch, "initial Λ has wrong length");
  const Index n2 = view.n_pairs();
  std::vector<Index> positions;
  if (opt.restriction == Restriction::Self) {
    positions = diagonal_positions(view.n_assets());
  } else {
    for (Index p = 0; p < n2; ++p) positions.push_back(p);
  }

  MsFit<Scalar> fit;
  Vec<Scalar> lambda = unit<Scalar>(init.lambda, "initial Λ");
  Vec<Scalar> phi = init.phi.size() == n2 ? init.phi : Vec<Scalar>::Zero(n2);
  for (int k = 1; k <= opt.max_iter; ++k) {
    Mat<Scalar> xl = chi_lambda(view, lambda);
    if (opt.restriction == Restriction::Self) xl = select_columns(xl, positions);
    Vec<Scalar> sub = unit<Scalar>(step(xl), "Φ");
    orient(sub, xl);
    Vec<Scalar> phi_next = opt.restriction == Restriction::Self ? embed(sub, positions, n2) : sub;

    const Mat<Scalar> xp = chi_phi(view, phi_next);
    Vec<Scalar> lambda_next = unit<Scalar>(step(xp), "Λ");
    orient(lambda_next, xp);

    IterationRecord<Scalar> rec;
    rec.sr2 = squared_sharpe(xp * lambda_next);
    rec.delta_lambda = max_abs_diff(lambda_next, lambda);
    rec.delta_phi = max_abs_diff(phi_next, phi);
    fit.trace.records.push_back(rec);
    fit.trace.iterations = k;
    lambda = std::move(lambda_next);
    phi = std::move(phi_next);
    if (std::max(rec.delta_lambda, rec.delta_phi) < Scalar(opt.tol)) {
      fit.trace.converged = true;
      break;
    }
  }
  fit.params.lambda = std::move(lambda);
  fit.params.phi = std::move(phi);
  fit.params.objective = Objective::MaxSharpe;
  fit.params.restriction = opt.restriction;
  canonicalize(fit.params, view.mean());
  return fit;
}

}  // namespace detail

/// Leading singular pair of the mean managed-portfolio matrix: Λ = V(:,1), Φ = U(:,1).
/// Under Restriction::Self only the diagonal rows of Π (own-asset predictability) enter.
template <typename Scalar = double>
SdfParams<Scalar> estimate_mr(const ManagedView<Scalar>& view, Restriction restriction = Restriction::Cross) {
  const Mat<Scalar>& mean = view.mean();
  std::vector<Index> rows;
  if (restriction == Restriction::Self) rows = diagonal_positions(view.n_assets());
  const Mat<Scalar> target = restriction == Restriction::Self ? Mat<Scalar>(mean(rows, Eigen::all)) : mean;
  if (target.norm() < Scalar(1e-14)) throw Error(Errc::ZeroMatrix, "mean managed-portfolio matrix is zero");
  Eigen::BDCSVD<Mat<Scalar>> svd(target, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SdfParams<Scalar> p;
  p.objective = Objective::MaxReturn;
  p.restriction = restriction;
  p.lambda = svd.matrixV().col(0).normalized();
  const Vec<Scalar> u = svd.matrixU().col(0).normalized();
  p.phi = restriction == Restriction::Self ? detail::embed(u, rows, view.n_pairs()) : u;
  detail::canonicalize(p, mean);
  return p;
}

template <typename Scalar = double>
SdfParams<Scalar> estimate_mr(const ManagedSeries<Scalar>& series, Restriction restriction = Restriction::Cross) {
  return estimate_mr(series.view(), restriction);
}

/// Exact alternating maximization of the squared Sharpe ratio: each half-step takes the
/// principal eigenvector of B⁻¹A for the block being updated. Throws SingularMoment when the
/// relevant covariance is numerically singular.
template <typename Scalar = double>
MsFit<Scalar> estimate_ms_eigen(const ManagedView<Scalar>& view, const SdfParams<Scalar>& init,
                                const SolverOptions& opt = {}) {
  return detail::alternate(view, init, opt, [](const Mat<Scalar>& x) { return detail::rayleigh_step(x); });
}

/// Alternating ridge regressions of ones on χ_Λ (for Φ) and χ_Φ (for Λ) with a shared penalty.
template <typename Scalar = double>
MsFit<Scalar> estimate_ms_ridge(const ManagedView<Scalar>& view, double ridge, const SdfParams<Scalar>& init,
                                const SolverOptions& opt = {}) {
  if (ridge < 0) throw Error(Errc::Config, "ridge penalty must be nonnegative");
  auto fit = detail::alternate(view, init, opt, [ridge](const Mat<Scalar>& x) { return ridge_sdf_weights(x, ridge); });
  fit.params.ridge = Scalar(ridge);
  return fit;
}

struct CvResult {
  std::vector<double> grid;
  std::vector<double> fold_scores;               // mean held-out annualized Sharpe per penalty
  std::vector<std::vector<double>> per_fold;     // [penalty][fold]
  double chosen = 0;
  std::size_t chosen_index = 0;
};

/// Contiguous fold boundaries; the first T mod k folds get one extra observation.
inline std::vector<std::pair<Index, Index>> contiguous_folds(Index t, int folds) {
  std::vector<std::pair<Index, Index>> out;
  const Index base = t / folds, extra = t % folds;
  Index start = 0;
  for (int f = 0; f < folds; ++f) {
    const Index len = base + (f < extra ? 1 : 0);
    out.emplace_back(start, start + len);
    start += len;
  }
  return out;
}

/// Annualized Sharpe ratio with sample (n−1) standard deviation; nullopt when undefined.
template <typename Derived>
std::optional<double> annualized_sharpe(const Eigen::MatrixBase<Derived>& pi, double periods = 12.0) {
  if (pi.size() < 2) return std::nullopt;
  const double mu = static_cast<double>(pi.mean());
  const double var = static_cast<double>((pi.array() - pi.mean()).square().sum()) / double(pi.size() - 1);
  const double sd = std::sqrt(var);
  if (!(sd > 1e-14 * std::max(1.0, std::abs(mu)))) return std::nullopt;
  return mu / sd * std::sqrt(periods);
}

/// k-fold selection of the ridge penalty. Each fit starts from the MR solution of its
/// training set and is scored by the annualized Sharpe ratio of π_s on the held-out block.
/// The best mean score wins; ties go to the larger penalty.
template <typename Scalar = double>
CvResult cross_validate(const ManagedView<Scalar>& view, const std::vector<double>& grid, int folds,
                                const SolverOptions& opt = {}) {
  if (grid.empty()) throw Error(Errc::Config, "empty ridge grid");
  if (folds < 2) throw Error(Errc::Config, "need at least 2 folds");
  if (view.T() < folds) throw Error(Errc::TooShort, "fewer observations than folds");
  CvResult res;
  res.grid = grid;
  res.per_fold.assign(grid.size(), {});
  const auto bounds = contiguous_folds(view.T(), folds);
  for (const auto& [lo, hi] : bounds) {
    std::vector<Index> train, test;
    for (Index k = 0; k < view.T(); ++k) (k >= lo && k < hi ? test : train).push_back(k);
    const ManagedView<Scalar> train_view(view, train), test_view(view, test);
    const SdfParams<Scalar> init = estimate_mr(train_view, opt.restriction);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      double score = std::numeric_limits<double>::quiet_NaN();
      if (train_view.T() >= 2) {
        const auto fit = estimate_ms_ridge(train_view, grid[g], init, opt);
        if (auto sr = annualized_sharpe(strategy_returns(test_view, fit.params.lambda, fit.params.phi))) score = *sr;
      }
      res.per_fold[g].push_back(score);
    }
  }
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double sum = 0;
    int count = 0;
    for (double s : res.per_fold[g])
      if (std::isfinite(s)) sum += s, ++count;
    const double mean = count > 0 ? sum / count : -std::numeric_limits<double>::infinity();
    res.fold_scores.push_back(mean);
    const bool better = mean > best;
    const bool tie_larger = mean == best && grid[g] > grid[res.chosen_index];
    if (g == 0 || better || tie_larger) {
      best = std::max(best, mean);
      res.chosen_index = g;
    }
  }
  res.chosen = grid[res.chosen_index];
  return res;
}

}  // namespace crosspred
