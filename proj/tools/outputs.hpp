#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crosspred/backtest.hpp"
#include "crosspred/config.hpp"
#include "crosspred/network.hpp"
#include "crosspred/regress.hpp"

namespace crosspred::cli {

/// Collects written files and input digests, then writes manifest.cfg.
class RunRecorder {
 public:
  RunRecorder(std::string command, KeyValueConfig config, std::filesystem::path out_dir);

  const std::filesystem::path& dir() const { return dir_; }
  /// Opens `name` under the output directory and records it.
  std::ofstream open(const std::string& name);
  void input(const std::string& key, const std::filesystem::path& path);
  void note(std::string text) { notes_.push_back(std::move(text)); }
  const std::vector<std::string>& notes() const { return notes_; }
  /// Writes manifest.cfg; returns its path.
  std::filesystem::path finish();

 private:
  std::string command_;
  KeyValueConfig config_;
  std::filesystem::path dir_;
  std::vector<std::string> outputs_;
  std::map<std::string, std::string> inputs_;
  std::vector<std::string> notes_;
  std::string started_;
};

std::string utc_now();

void write_lambda(std::ostream& out, const std::vector<std::string>& signals, const Eigen::VectorXd& lambda);
/// Full N×N grid, or only the diagonal when `diagonal_only`.
void write_psi(std::ostream& out, const std::vector<std::string>& assets, const Eigen::MatrixXd& psi,
               bool diagonal_only);
void write_connectedness(std::ostream& rows, std::ostream& totals, const std::vector<std::string>& assets,
                         const std::vector<ConnectednessReport<double>>& reports);
void write_blocks(std::ostream& out, const std::vector<MonthStamp>& dates,
                  const std::vector<BlockReport<double>>& blocks);
void write_importance(std::ostream& out, const ImportanceReport& report, const std::map<std::string, std::string>& theme_of);
void write_spanning(std::ostream& out, const SpanningResult& result);
void write_report(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& rows);
void append_performance(std::vector<std::pair<std::string, std::string>>& rows, const std::string& prefix,
                        const PerformanceReport& p);

/// Two-column key → value map (asset,group or signal,theme).
std::map<std::string, std::string> load_mapping(const std::filesystem::path& path);

}  // namespace crosspred::cli
