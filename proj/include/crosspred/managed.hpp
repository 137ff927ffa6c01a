#pragma once

// Managed-portfolio returns Π_s = (I_N ⊗ r_s) S_t and the Φ = vec(Ψ') machinery.
//
// Row layout of every N²×M matrix here is asset-major: row p = i·N + j (0-based) holds
// r_{s,j} · S_{t,i}', i.e. asset i's signals interacted with asset j's return. Φ uses the
// same index, so Φ_p = Ψ(i, j).

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "crosspred/error.hpp"
#include "crosspred/month.hpp"
#include "crosspred/panel.hpp"
#include "crosspred/types.hpp"

namespace crosspred {

/// Θ = I_N − (1/N)ιι'. Applied by subtracting the mean; `matrix()` materializes it.
template <typename Scalar = double>
struct CenteringProjector {
  Index n = 0;

  explicit CenteringProjector(Index dim) : n(dim) {}

  template <typename Derived>
  Vec<Scalar> apply(const Eigen::MatrixBase<Derived>& v) const {
    return v.array() - v.mean();
  }

  Mat<Scalar> matrix() const {
    return Mat<Scalar>::Identity(n, n) - Mat<Scalar>::Constant(n, n, Scalar(1) / Scalar(n));
  }
};

/// Row-major flattening of Ψ: Φ_{i·N+j} = Ψ(i, j).
template <typename Derived>
Vec<typename Derived::Scalar> vec_transpose(const Eigen::MatrixBase<Derived>& psi) {
  if (psi.rows() != psi.cols())
    throw Error(Errc::NotSquare, "Ψ is " + std::to_string(psi.rows()) + "x" + std::to_string(psi.cols()));
  const Index n = psi.rows();
  Vec<typename Derived::Scalar> phi(n * n);
  for (Index i = 0; i < n; ++i) phi.segment(i * n, n) = psi.row(i).transpose();
  return phi;
}

inline Index perfect_square_root(Index len) {
  const auto n = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(len))));
  if (n * n != len) throw Error(Errc::NotSquare, "length " + std::to_string(len) + " is not a perfect square");
  return n;
}

template <typename Derived>
Mat<typename Derived::Scalar> unvec_transpose(const Eigen::MatrixBase<Derived>& phi) {
  const Index n = perfect_square_root(phi.size());
  Mat<typename Derived::Scalar> psi(n, n);
  for (Index i = 0; i < n; ++i) psi.row(i) = phi.segment(i * n, n).transpose();
  return psi;
}

/// Positions p = i·N + i of the diagonal of Ψ inside Φ.
inline std::vector<Index> diagonal_positions(Index n_assets) {
  std::vector<Index> out;
  for (Index i = 0; i < n_assets; ++i) out.push_back(i * n_assets + i);
  return out;
}

/// Π_s for one date. With `zero_cost`, each block is Θ(r_s S_{it}'), computed as (Θr_s)S_{it}'.
template <typename Scalar = double, typename DS, typename DR>
Mat<Scalar> managed_returns(const Eigen::MatrixBase<DS>& signals, const Eigen::MatrixBase<DR>& returns,
                            bool zero_cost) {
  const Index n = signals.rows(), m = signals.cols();
  if (returns.size() != n)
    throw Error(Errc::DimensionMismatch, "S_t has " + std::to_string(n) + " rows but r_s has " +
                                             std::to_string(returns.size()) + " entries");
  Vec<Scalar> r = returns.template cast<Scalar>();
  if (zero_cost) r = CenteringProjector<Scalar>(n).apply(r);
  Mat<Scalar> pi(n * n, m);
  for (Index i = 0; i < n; ++i) pi.middleRows(i * n, n).noalias() = r * signals.row(i).template cast<Scalar>();
  return pi;
}

template <typename Scalar>
class ManagedView;

/// Per-date Π_s matrices with their sample mean Π.
template <typename Scalar = double>
struct ManagedSeries {
  std::vector<Mat<Scalar>> per_date;
  Mat<Scalar> mean;
  bool zero_cost = false;
  Index n_assets = 0;
  Index n_signals = 0;
  std::vector<MonthStamp> dates;  // return dates s

  Index T() const { return static_cast<Index>(per_date.size()); }

  ManagedView<Scalar> view() const { return ManagedView<Scalar>(*this, 0, T()); }
  ManagedView<Scalar> view(Index begin, Index end) const { return ManagedView<Scalar>(*this, begin, end); }
  ManagedView<Scalar> view(const std::vector<Index>& rows) const { return ManagedView<Scalar>(*this, rows); }
};

/// Non-owning subset of a ManagedSeries (a rolling window or a CV training set) with its
/// own sample mean. The series must outlive the view.
template <typename Scalar = double>
class ManagedView {
 public:
  ManagedView(const ManagedSeries<Scalar>& series, Index begin, Index end) : ManagedView(series) {
    if (begin < 0 || end > series.T() || begin >= end)
      throw Error(Errc::DimensionMismatch, "view [" + std::to_string(begin) + "," + std::to_string(end) +
                                               ") outside series of length " + std::to_string(series.T()));
    for (Index k = begin; k < end; ++k) mats_.push_back(std::cref(series.per_date[k]));
    finish();
  }

  ManagedView(const ManagedSeries<Scalar>& series, const std::vector<Index>& rows) : ManagedView(series) {
    if (rows.empty()) throw Error(Errc::DimensionMismatch, "empty view");
    for (Index k : rows) mats_.push_back(std::cref(series.per_date.at(static_cast<std::size_t>(k))));
    finish();
  }

  /// Rows of an existing view, e.g. the training folds of a rolling window.
  ManagedView(const ManagedView& parent, const std::vector<Index>& rows)
      : n_assets_(parent.n_assets_), n_signals_(parent.n_signals_), zero_cost_(parent.zero_cost_) {
    if (rows.empty()) throw Error(Errc::DimensionMismatch, "empty view");
    for (Index k : rows) mats_.push_back(parent.mats_.at(static_cast<std::size_t>(k)));
    finish();
  }

  Index T() const { return static_cast<Index>(mats_.size()); }
  const Mat<Scalar>& operator[](Index k) const { return mats_[static_cast<std::size_t>(k)].get(); }
  const Mat<Scalar>& mean() const { return mean_; }
  Index n_assets() const { return n_assets_; }
  Index n_signals() const { return n_signals_; }
  Index n_pairs() const { return n_assets_ * n_assets_; }
  bool zero_cost() const { return zero_cost_; }

 private:
  explicit ManagedView(const ManagedSeries<Scalar>& series)
      : n_assets_(series.n_assets), n_signals_(series.n_signals), zero_cost_(series.zero_cost) {}

  void finish() {
    mean_ = Mat<Scalar>::Zero(n_pairs(), n_signals_);
    for (const auto& m : mats_) mean_ += m.get();
    mean_ /= Scalar(T());
  }

  std::vector<std::reference_wrapper<const Mat<Scalar>>> mats_;
  Mat<Scalar> mean_;
  Index n_assets_;
  Index n_signals_;
  bool zero_cost_;
};

namespace detail {

// Explicit (I_N ⊗ r)S with Θ materialized, for the construction-time self check.
template <typename Scalar>
Mat<Scalar> managed_by_kronecker(const Eigen::MatrixXd& signals, const Eigen::VectorXd& returns, bool zero_cost) {
  const Index n = signals.rows();
  Vec<Scalar> r = returns.cast<Scalar>();
  if (zero_cost) r = CenteringProjector<Scalar>(n).matrix() * r;
  Mat<Scalar> kron = Mat<Scalar>::Zero(n * n, n);
  for (Index i = 0; i < n; ++i) kron.block(i * n, i, n, 1) = r;
  return kron * signals.cast<Scalar>();
}

}  // namespace detail

template <typename Scalar = double>
ManagedSeries<Scalar> build_managed(const AlignedSample& sample, bool zero_cost) {
  if (sample.pairs.empty()) throw Error(Errc::DimensionMismatch, "empty aligned sample");
  ManagedSeries<Scalar> out;
  out.zero_cost = zero_cost;
  out.n_assets = sample.n_assets();
  out.n_signals = sample.n_signals();
  out.mean = Mat<Scalar>::Zero(out.n_assets * out.n_assets, out.n_signals);
  for (const auto& p : sample.pairs) {
    if (p.signals.rows() != out.n_assets || p.signals.cols() != out.n_signals)
      throw Error(Errc::DimensionMismatch, "S_t at " + p.signal_date.str() + " has wrong shape");
    out.per_date.push_back(managed_returns<Scalar>(p.signals, p.returns, zero_cost));
    out.mean += out.per_date.back();
    out.dates.push_back(p.return_date);
  }
  out.mean /= Scalar(out.T());

  if (out.n_assets <= 128) {
    const auto& p = sample.pairs.front();
    const Mat<Scalar> ref = detail::managed_by_kronecker<Scalar>(p.signals, p.returns, zero_cost);
    const Scalar scale = std::max(Scalar(1), ref.cwiseAbs().maxCoeff());
    if ((ref - out.per_date.front()).cwiseAbs().maxCoeff() > Scalar(1e-12) * scale)
      throw std::logic_error("managed-portfolio construction disagrees with the Kronecker form");
  }
  return out;
}

/// T×M matrix with row s = (Π_s'Φ)'.
template <typename Scalar, typename Derived>
Mat<Scalar> chi_phi(const ManagedView<Scalar>& view, const Eigen::MatrixBase<Derived>& phi) {
  if (phi.size() != view.n_pairs())
    throw Error(Errc::DimensionMismatch, "Φ has length " + std::to_string(phi.size()) + ", expected " +
                                             std::to_string(view.n_pairs()));
  Mat<Scalar> chi(view.T(), view.n_signals());
  for (Index s = 0; s < view.T(); ++s) chi.row(s).noalias() = phi.transpose() * view[s];
  return chi;
}

/// T×N² matrix with row s = (Π_s Λ)'.
template <typename Scalar, typename Derived>
Mat<Scalar> chi_lambda(const ManagedView<Scalar>& view, const Eigen::MatrixBase<Derived>& lambda) {
  if (lambda.size() != view.n_signals())
    throw Error(Errc::DimensionMismatch, "Λ has length " + std::to_string(lambda.size()) + ", expected " +
                                             std::to_string(view.n_signals()));
  Mat<Scalar> chi(view.T(), view.n_pairs());
  for (Index s = 0; s < view.T(); ++s) chi.row(s).noalias() = (view[s] * lambda).transpose();
  return chi;
}

/// Strategy returns π_s = Λ'Π_s'Φ over the view.
template <typename Scalar, typename DL, typename DP>
Vec<Scalar> strategy_returns(const ManagedView<Scalar>& view, const Eigen::MatrixBase<DL>& lambda,
                             const Eigen::MatrixBase<DP>& phi) {
  return chi_phi(view, phi) * lambda;
}

template <typename Scalar = double>
struct DominanceReport {
  bool holds = true;
  Vec<Scalar> plain_singular_values;
  Vec<Scalar> centered_singular_values;
  Scalar max_excess = 0;  // max_i σ_i(centered) − σ_i(plain)
};

/// Ordered singular values of the Θ-projected mean never exceed those of the plain mean.
template <typename Scalar = double>
DominanceReport<Scalar> singular_value_dominance_check(const ManagedSeries<Scalar>& plain,
                                                       const ManagedSeries<Scalar>& centered,
                                                       Scalar tolerance = Scalar(1e-10)) {
  if (plain.mean.rows() != centered.mean.rows() || plain.mean.cols() != centered.mean.cols())
    throw Error(Errc::DimensionMismatch, "mean matrices differ in shape");
  DominanceReport<Scalar> rep;
  rep.plain_singular_values = Eigen::JacobiSVD<Mat<Scalar>>(plain.mean).singularValues();
  rep.centered_singular_values = Eigen::JacobiSVD<Mat<Scalar>>(centered.mean).singularValues();
  rep.max_excess = (rep.centered_singular_values - rep.plain_singular_values).maxCoeff();
  rep.holds = rep.max_excess <= tolerance;
  return rep;
}

}  // namespace crosspred
