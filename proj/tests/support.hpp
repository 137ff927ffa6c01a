#pragma once

// Shared fixtures for the unit and acceptance suites.

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "crosspred/managed.hpp"
#include "crosspred/panel.hpp"

namespace testing_support {

using crosspred::AlignedSample;
using crosspred::MonthStamp;

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("crosspred_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path) << text;
  return path;
}

inline Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double sd = 1.0) {
  std::normal_distribution<double> z(0.0, sd);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = z(rng);
  return m;
}

inline Eigen::VectorXd random_unit(std::mt19937_64& rng, Eigen::Index n) {
  Eigen::VectorXd v = gaussian(rng, n, 1);
  return v.normalized();
}

/// Random aligned sample: signals N(0,1), returns = 0.05·(mean signal) + drift + noise.
inline AlignedSample random_sample(std::uint64_t seed, Eigen::Index n, Eigen::Index m, Eigen::Index t,
                                   double drift = 0.01) {
  std::mt19937_64 rng(seed);
  AlignedSample s;
  for (Eigen::Index i = 0; i < n; ++i) s.assets.push_back("A" + std::to_string(i + 1));
  for (Eigen::Index k = 0; k < m; ++k) s.signals.push_back("s" + std::to_string(k + 1));
  const MonthStamp start{2001, 1};
  Eigen::MatrixXd mix = gaussian(rng, n, n, 0.3);
  for (Eigen::Index k = 0; k < t; ++k) {
    crosspred::SamplePair p;
    p.signal_date = start.plus_months(static_cast<int>(k));
    p.return_date = p.signal_date.plus_months(1);
    p.signals = gaussian(rng, n, m);
    p.returns = 0.05 * mix * p.signals.rowwise().mean() + gaussian(rng, n, 1, 0.05);
    p.returns.array() += drift;
    s.pairs.push_back(std::move(p));
  }
  return s;
}

/// ManagedSeries holding one date equal to `pi`, so the mean is `pi` exactly.
inline crosspred::ManagedSeries<double> series_from_mean(const Eigen::MatrixXd& pi) {
  crosspred::ManagedSeries<double> s;
  s.per_date = {pi};
  s.mean = pi;
  s.n_assets = crosspred::perfect_square_root(pi.rows());
  s.n_signals = pi.cols();
  s.dates = {MonthStamp{2000, 1}};
  return s;
}

inline double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.dot(b) / (a.norm() * b.norm()); }

}  // namespace testing_support
