#pragma once

// Directed-network summaries of a spillover matrix Ψ, where Ψ(i, j) is the predictive
// influence of asset i's signals on asset j's return. All measures use |Ψ(i, j)|.
//
//   FROM_i  = Σ_{j≠i} |Ψ(i, j)|     (row sums, signals sent by i)
//   TO_j    = Σ_{i≠j} |Ψ(i, j)|     (column sums, signals received by j)
//   NET_k   = TO_k − FROM_k         (< 0 net transmitter, > 0 net receiver)
//   TOTAL   = (1/N) Σ_{i≠j} |Ψ(i, j)|
//
// Block averages by asset group include diagonal cells; TOTAL excludes them.

#include <map>
#include <string>
#include <vector>

#include "crosspred/error.hpp"
#include "crosspred/estimators.hpp"
#include "crosspred/month.hpp"
#include "crosspred/types.hpp"

namespace crosspred {

template <typename Scalar = double>
struct ConnectednessReport {
  Vec<Scalar> from;
  Vec<Scalar> to;
  Vec<Scalar> net;
  Scalar total = 0;
  MonthStamp date;
};

template <typename Derived>
ConnectednessReport<typename Derived::Scalar> connectedness(const Eigen::MatrixBase<Derived>& psi,
                                                            MonthStamp date = {}) {
  using Scalar = typename Derived::Scalar;
  if (psi.rows() != psi.cols())
    throw Error(Errc::NotSquare, "Ψ is " + std::to_string(psi.rows()) + "x" + std::to_string(psi.cols()));
  Mat<Scalar> off = psi.cwiseAbs();
  off.diagonal().setZero();
  ConnectednessReport<Scalar> rep;
  rep.date = date;
  rep.from = off.rowwise().sum();
  rep.to = off.colwise().sum().transpose();
  rep.net = rep.to - rep.from;
  rep.total = off.sum() / Scalar(psi.rows());
  return rep;
}

template <typename Scalar = double>
struct BlockReport {
  std::vector<std::string> groups;  // in order of first appearance in the labels
  Mat<Scalar> averages;             // averages(g, h) = mean |Ψ(i, j)| over i ∈ g, j ∈ h
};

template <typename Derived>
BlockReport<typename Derived::Scalar> block_average(const Eigen::MatrixBase<Derived>& psi,
                                                    const std::vector<std::string>& labels) {
  using Scalar = typename Derived::Scalar;
  if (psi.rows() != psi.cols()) throw Error(Errc::NotSquare, "Ψ must be square");
  if (static_cast<Index>(labels.size()) != psi.rows())
    throw Error(Errc::LabelMismatch, std::to_string(labels.size()) + " labels for " + std::to_string(psi.rows()) +
                                         " assets");
  BlockReport<Scalar> rep;
  std::map<std::string, Index> slot;
  std::vector<Index> group_of;
  for (const auto& l : labels) {
    auto [it, inserted] = slot.try_emplace(l, static_cast<Index>(rep.groups.size()));
    if (inserted) rep.groups.push_back(l);
    group_of.push_back(it->second);
  }
  const Index g = static_cast<Index>(rep.groups.size());
  Mat<Scalar> sums = Mat<Scalar>::Zero(g, g), counts = Mat<Scalar>::Zero(g, g);
  for (Index i = 0; i < psi.rows(); ++i)
    for (Index j = 0; j < psi.cols(); ++j) {
      sums(group_of[i], group_of[j]) += std::abs(psi(i, j));
      counts(group_of[i], group_of[j]) += Scalar(1);
    }
  rep.averages = sums.cwiseQuotient(counts);
  return rep;
}

struct ImportanceReport {
  std::vector<std::string> signals;
  std::vector<double> importance;  // time-series mean of |Λ_m|
  std::map<std::string, double> themes;  // theme -> mean importance of member signals
};

/// Per-signal time-series average of |Λ_m| with an optional signal → theme rollup.
template <typename Scalar = double>
ImportanceReport signal_importance(const std::vector<SdfParams<Scalar>>& history,
                                   const std::vector<std::string>& signal_names = {},
                                   const std::map<std::string, std::string>& theme_of = {}) {
  if (history.empty()) throw Error(Errc::TooShort, "empty parameter history");
  const Index m = history.front().lambda.size();
  Vec<Scalar> acc = Vec<Scalar>::Zero(m);
  for (const auto& p : history) {
    if (p.lambda.size() != m) throw Error(Errc::DimensionMismatch, "Λ length changes across windows");
    acc += p.lambda.cwiseAbs();
  }
  acc /= Scalar(history.size());

  ImportanceReport rep;
  for (Index k = 0; k < m; ++k) {
    rep.signals.push_back(k < static_cast<Index>(signal_names.size()) ? signal_names[k] : "s" + std::to_string(k + 1));
    rep.importance.push_back(static_cast<double>(acc(k)));
  }
  std::map<std::string, std::pair<double, int>> theme_acc;
  for (Index k = 0; k < m; ++k) {
    auto it = theme_of.find(rep.signals[k]);
    if (it == theme_of.end()) continue;
    auto& [sum, count] = theme_acc[it->second];
    sum += rep.importance[k];
    ++count;
  }
  for (const auto& [theme, sc] : theme_acc) rep.themes[theme] = sc.first / sc.second;
  return rep;
}

}  // namespace crosspred
