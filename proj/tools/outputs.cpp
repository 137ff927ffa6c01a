#include "outputs.hpp"

#include <ctime>

#include "crosspred/csv.hpp"
#include "crosspred/digest.hpp"
#include "crosspred/error.hpp"

#ifndef CROSSPRED_VERSION
#define CROSSPRED_VERSION "dev"
#endif

namespace crosspred::cli {

using csv::format;

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunRecorder::RunRecorder(std::string command, KeyValueConfig config, std::filesystem::path out_dir)
    : command_(std::move(command)), config_(std::move(config)), dir_(std::move(out_dir)), started_(utc_now()) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(Errc::Config, "cannot create output directory " + dir_.string() + ": " + ec.message());
}

std::ofstream RunRecorder::open(const std::string& name) {
  std::ofstream f(dir_ / name, std::ios::binary);
  if (!f) throw Error(Errc::Config, "cannot write " + (dir_ / name).string());
  f.precision(17);
  outputs_.push_back(name);
  return f;
}

void RunRecorder::input(const std::string& key, const std::filesystem::path& path) {
  inputs_[key] = sha256_file(path);
}

std::filesystem::path RunRecorder::finish() {
  KeyValueConfig m = config_;
  m.set("manifest.command", command_);
  m.set("manifest.version", CROSSPRED_VERSION);
  m.set("manifest.started_utc", started_);
  m.set("manifest.finished_utc", utc_now());
  for (const auto& [k, d] : inputs_) m.set("manifest.input." + k + ".sha256", d);
  for (const auto& name : outputs_) m.set("manifest.output." + name + ".sha256", sha256_file(dir_ / name));
  const auto path = dir_ / "manifest.cfg";
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::Config, "cannot write " + path.string());
  f << "# crosspred run manifest; rerun with: crosspred " << command_ << " --config " << path.string() << "\n";
  f << m.serialize();
  return path;
}

void write_lambda(std::ostream& out, const std::vector<std::string>& signals, const Eigen::VectorXd& lambda) {
  out << "signal,value\n";
  for (Eigen::Index m = 0; m < lambda.size(); ++m) out << signals[static_cast<std::size_t>(m)] << ',' << format(lambda(m)) << '\n';
}

void write_psi(std::ostream& out, const std::vector<std::string>& assets, const Eigen::MatrixXd& psi,
               bool diagonal_only) {
  out << "from_asset,to_asset,value\n";
  for (Eigen::Index i = 0; i < psi.rows(); ++i)
    for (Eigen::Index j = 0; j < psi.cols(); ++j) {
      if (diagonal_only && i != j) continue;
      out << assets[static_cast<std::size_t>(i)] << ',' << assets[static_cast<std::size_t>(j)] << ','
          << format(psi(i, j)) << '\n';
    }
}

void write_connectedness(std::ostream& rows, std::ostream& totals, const std::vector<std::string>& assets,
                         const std::vector<ConnectednessReport<double>>& reports) {
  rows << "date,asset,from,to,net\n";
  totals << "date,total\n";
  for (const auto& r : reports) {
    for (std::size_t i = 0; i < assets.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      rows << r.date.str() << ',' << assets[i] << ',' << format(r.from(k)) << ',' << format(r.to(k)) << ','
           << format(r.net(k)) << '\n';
    }
    totals << r.date.str() << ',' << format(r.total) << '\n';
  }
}

void write_blocks(std::ostream& out, const std::vector<MonthStamp>& dates,
                  const std::vector<BlockReport<double>>& blocks) {
  out << "date,from_group,to_group,avg_abs\n";
  for (std::size_t t = 0; t < blocks.size(); ++t) {
    const auto& b = blocks[t];
    for (std::size_t g = 0; g < b.groups.size(); ++g)
      for (std::size_t h = 0; h < b.groups.size(); ++h)
        out << dates[t].str() << ',' << b.groups[g] << ',' << b.groups[h] << ','
            << format(b.averages(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(h))) << '\n';
  }
}

void write_importance(std::ostream& out, const ImportanceReport& report,
                      const std::map<std::string, std::string>& theme_of) {
  out << "signal,theme,importance\n";
  for (std::size_t m = 0; m < report.signals.size(); ++m) {
    auto it = theme_of.find(report.signals[m]);
    out << report.signals[m] << ',' << (it == theme_of.end() ? "" : it->second) << ','
        << format(report.importance[m]) << '\n';
  }
  for (const auto& [theme, v] : report.themes) out << "theme:" << theme << ',' << theme << ',' << format(v) << '\n';
}

void write_spanning(std::ostream& out, const SpanningResult& result) {
  out << "term,coefficient,se_nw,t_stat\n";
  const auto& f = result.fit;
  for (Eigen::Index k = 0; k < f.coefficients.size(); ++k) {
    const std::string name = k == 0 ? "alpha" : result.factor_names[static_cast<std::size_t>(k - 1)];
    out << name << ',' << format(f.coefficients(k)) << ',' << format(f.hac_se(k)) << ',' << format(f.hac_t_stats(k))
        << '\n';
  }
}

void write_report(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& rows) {
  out << "key,value\n";
  for (const auto& [k, v] : rows) out << k << ',' << v << '\n';
}

void append_performance(std::vector<std::pair<std::string, std::string>>& rows, const std::string& prefix,
                        const PerformanceReport& p) {
  rows.emplace_back(prefix + "mu_monthly_pct", format(p.mu_monthly_pct));
  rows.emplace_back(prefix + "sigma_monthly_pct", format(p.sigma_monthly_pct));
  rows.emplace_back(prefix + "sharpe_annualized", p.sharpe_annualized ? format(*p.sharpe_annualized) : "undefined");
  rows.emplace_back(prefix + "ce_annual", format(p.ce_annual));
  if (p.sum_avg) rows.emplace_back(prefix + "sum_avg", format(*p.sum_avg));
  if (p.asum_avg) rows.emplace_back(prefix + "asum_avg", format(*p.asum_avg));
  rows.emplace_back(prefix + "n_months", std::to_string(p.n_months));
}

std::map<std::string, std::string> load_mapping(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  if (t.header.size() != 2) throw Error(Errc::ParseError, t.source + ": expected two columns");
  std::map<std::string, std::string> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    if (!out.emplace(t.rows[r][0], t.rows[r][1]).second)
      throw Error(Errc::DuplicateKey, t.where(r) + ": '" + t.rows[r][0] + "' listed twice");
  return out;
}

}  // namespace crosspred::cli
