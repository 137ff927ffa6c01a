#include "commands.hpp"

#include <algorithm>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "crosspred/backtest.hpp"
#include "crosspred/csv.hpp"
#include "crosspred/dated.hpp"
#include "crosspred/error.hpp"
#include "crosspred/estimators.hpp"
#include "crosspred/managed.hpp"
#include "crosspred/network.hpp"
#include "crosspred/panel.hpp"
#include "crosspred/regress.hpp"
#include "crosspred/strategy.hpp"
#include "crosspred/synth.hpp"
#include "outputs.hpp"

#ifndef CROSSPRED_VERSION
#define CROSSPRED_VERSION "dev"
#endif

namespace crosspred::cli {
namespace {

using csv::format;
using Rows = std::vector<std::pair<std::string, std::string>>;

const std::vector<std::string> kCommon = {"out", "seed", "threads"};
const std::vector<std::string> kData = {"signals", "returns", "layout", "standardize", "first", "last"};
const std::vector<std::string> kModel = {"objective", "restriction", "zero_cost", "ridge", "cv",
                                         "cv_folds",  "ridge_grid",  "tol",       "max_iter"};
const std::vector<std::string> kDgp = {"layout", "n_assets", "b",      "b_self",          "b_cross", "sigma_s",
                                       "sigma_s_diag", "sigma_eps", "sigma_eps_diag", "signal_loadings", "months",
                                       "start"};

std::vector<std::string> join(std::initializer_list<const std::vector<std::string>*> parts,
                              std::vector<std::string> extra = {}) {
  std::vector<std::string> out;
  for (const auto* p : parts) out.insert(out.end(), p->begin(), p->end());
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

void check_keys(const std::string& command, const KeyValueConfig& cfg) {
  const auto& allowed = allowed_keys(command);
  for (const auto& [k, v] : cfg.entries()) {
    if (k.rfind("manifest.", 0) == 0) continue;
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw Error(Errc::Config, "unknown key '" + k + "' for " + command);
  }
}

/// The config as the command will see it: manifest bookkeeping removed.
KeyValueConfig effective(const KeyValueConfig& cfg) {
  KeyValueConfig out = cfg;
  for (const auto& k : cfg.keys_with_prefix("manifest.")) out.erase(k);
  return out;
}

std::string required(const KeyValueConfig& cfg, const std::string& key) {
  auto v = cfg.get(key);
  if (!v || v->empty()) throw Error(Errc::Config, "missing required key '" + key + "'");
  return *v;
}

std::filesystem::path out_dir(const KeyValueConfig& cfg) { return cfg.get_string("out", "out"); }

Layout layout_of(const KeyValueConfig& cfg) {
  const auto s = cfg.get_string("layout", "long");
  if (s == "long") return Layout::Long;
  if (s == "wide") return Layout::Wide;
  throw Error(Errc::Config, "layout must be long or wide, got '" + s + "'");
}

Objective objective_of(const KeyValueConfig& cfg) {
  auto s = cfg.get_string("objective", "ms");
  std::transform(s.begin(), s.end(), s.begin(), ::tolower);
  if (s == "ms") return Objective::MaxSharpe;
  if (s == "mr") return Objective::MaxReturn;
  throw Error(Errc::Config, "objective must be ms or mr, got '" + s + "'");
}

Restriction restriction_of(const KeyValueConfig& cfg) {
  const auto s = cfg.get_string("restriction", "cross");
  if (s == "cross") return Restriction::Cross;
  if (s == "self") return Restriction::Self;
  throw Error(Errc::Config, "restriction must be cross or self, got '" + s + "'");
}

SolverOptions solver_of(const KeyValueConfig& cfg) {
  SolverOptions opt;
  opt.tol = cfg.get_double("tol", opt.tol);
  opt.max_iter = static_cast<int>(cfg.get_int("max_iter", opt.max_iter));
  if (!(opt.tol > 0) || opt.max_iter < 1) throw Error(Errc::Config, "tol must be positive and max_iter >= 1");
  opt.restriction = restriction_of(cfg);
  return opt;
}

RidgeSelection ridge_of(const KeyValueConfig& cfg) {
  RidgeSelection r;
  r.fixed = cfg.get_double("ridge", r.fixed);
  r.cross_validate = cfg.get_bool("cv", false);
  r.folds = static_cast<int>(cfg.get_int("cv_folds", r.folds));
  if (auto g = cfg.get("ridge_grid")) r.grid = parse_list(*g, "ridge_grid");
  return r;
}

AlignedSample load_sample(const KeyValueConfig& cfg, RunRecorder& rec, std::ostream& err) {
  const std::filesystem::path sig = required(cfg, "signals"), ret = required(cfg, "returns");
  rec.input("signals", sig);
  rec.input("returns", ret);
  SignalPanel panel = load_signals(sig, layout_of(cfg));
  if (cfg.get_bool("standardize", true)) panel = standardize(panel);
  for (const auto& w : panel.warnings) {
    err << "warning: " << w << '\n';
    rec.note(w);
  }
  AlignedSample sample = align(panel, load_returns(ret));
  if (cfg.has("first") || cfg.has("last")) {
    const MonthStamp first = cfg.has("first") ? MonthStamp::parse(required(cfg, "first")) : sample.pairs.front().return_date;
    const MonthStamp last = cfg.has("last") ? MonthStamp::parse(required(cfg, "last")) : sample.pairs.back().return_date;
    sample = restrict_dates(sample, first, last);
  }
  return sample;
}

std::optional<std::filesystem::path> optional_input(const KeyValueConfig& cfg, const std::string& key,
                                                    RunRecorder& rec) {
  auto v = cfg.get(key);
  if (!v || v->empty()) return std::nullopt;
  rec.input(key, *v);
  return std::filesystem::path(*v);
}

void write_json(RunRecorder& rec, const nlohmann::json& j) {
  auto f = rec.open("run_metadata.json");
  f << j.dump(2) << '\n';
}

nlohmann::json base_metadata(const std::string& command, const KeyValueConfig& cfg, const RunRecorder& rec) {
  nlohmann::json j;
  j["command"] = command;
  j["version"] = CROSSPRED_VERSION;
  j["seed"] = cfg.get_int("seed", 1);
  auto entries = cfg.entries();
  entries.erase("out");  // location only; keeps outputs comparable across directories
  j["config"] = entries;
  if (command == "estimate" || command == "backtest")
    j["standardization"] = cfg.get_bool("standardize", true) ? "per-date z-score, population sd (divisor N)" : "none";
  j["notes"] = rec.notes();
  return j;
}

void report_manifest(std::ostream& out, const std::filesystem::path& manifest) {
  out << "manifest: " << manifest.string() << '\n';
}

// ---------------------------------------------------------------------------------------

struct Issue {
  Errc code;
  std::string message;
};

bool contiguous(const std::vector<MonthStamp>& dates, std::string& gap) {
  for (std::size_t k = 1; k < dates.size(); ++k)
    if (months_between(dates[k - 1], dates[k]) != 1) {
      gap = dates[k - 1].str() + " -> " + dates[k].str();
      return false;
    }
  return true;
}

}  // namespace

const std::vector<std::string>& allowed_keys(const std::string& command) {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"validate", join({&kCommon, &kData})},
      {"estimate", join({&kCommon, &kData, &kModel}, {"solver", "dump_pi"})},
      {"backtest", join({&kCommon, &kData, &kModel},
                        {"window", "leverage", "oos_start", "warm_start", "trailing_window", "benchmark", "state",
                         "factors", "labels", "themes"})},
      {"synth", join({&kCommon, &kDgp})},
      {"analyze", join({&kCommon}, {"psi", "lambda_history", "labels", "themes", "strategy", "factors",
                                    "characteristics"})},
  };
  auto it = table.find(command);
  if (it == table.end()) throw Error(Errc::Config, "unknown command '" + command + "'");
  return it->second;
}

int cmd_validate(const KeyValueConfig& cfg, std::ostream& out, std::ostream& err) {
  RunRecorder rec("validate", cfg, out_dir(cfg));
  std::vector<Issue> issues;
  std::optional<SignalPanel> sp;
  std::optional<ReturnPanel> rp;
  auto attempt = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      issues.push_back({e.code(), e.what()});
    }
  };
  const std::filesystem::path sig = required(cfg, "signals"), ret = required(cfg, "returns");
  attempt([&] {
    rec.input("signals", sig);
    sp = load_signals(sig, layout_of(cfg));
  });
  attempt([&] {
    rec.input("returns", ret);
    rp = load_returns(ret);
  });
  std::string gap;
  if (sp && !contiguous(sp->dates, gap))
    issues.push_back({Errc::DateMisalignment, "signal dates skip a month: " + gap});
  if (rp && !contiguous(rp->dates, gap))
    issues.push_back({Errc::DateMisalignment, "return dates skip a month: " + gap});
  std::optional<AlignedSample> sample;
  if (sp && rp) {
    attempt([&] { sample = align(standardize(*sp), *rp); });
    if (sample) {
      // every signal month whose following month lies inside the return range must pair
      const MonthStamp r0 = rp->dates.front(), r1 = rp->dates.back();
      for (const auto& d : sp->dates) {
        const MonthStamp next = d.plus_months(1);
        if (next < r0 || next > r1) continue;
        if (!std::binary_search(rp->dates.begin(), rp->dates.end(), next)) {
          issues.push_back({Errc::DateMisalignment, "signals at " + d.str() + " have no return at " + next.str()});
          break;
        }
      }
    }
    for (const auto& w : standardize(*sp).warnings) rec.note(w);
  }

  {
    auto f = rec.open("validation.csv");
    f << "kind,exit_code,message\n";
    for (const auto& i : issues) {
      std::string msg = i.message;
      std::replace(msg.begin(), msg.end(), ',', ';');
      f << to_string(i.code) << ',' << exit_code(i.code) << ',' << msg << '\n';
    }
  }
  for (const auto& n : rec.notes()) out << "note: " << n << '\n';
  for (const auto& i : issues) err << "issue: " << i.message << '\n';
  if (issues.empty() && sample)
    out << "ok: " << sample->n_assets() << " assets, " << sample->n_signals() << " signals, " << sample->T()
        << " aligned months (" << sample->pairs.front().return_date.str() << ".."
        << sample->pairs.back().return_date.str() << ")\n";
  report_manifest(out, rec.finish());
  return issues.empty() ? 0 : exit_code(issues.front().code);
}

int cmd_estimate(const KeyValueConfig& cfg, std::ostream& out, std::ostream& err) {
  RunRecorder rec("estimate", cfg, out_dir(cfg));
  const AlignedSample sample = load_sample(cfg, rec, err);
  const Objective objective = objective_of(cfg);
  const Restriction restriction = restriction_of(cfg);
  const bool zero_cost = cfg.get_bool("zero_cost", false);
  if (restriction == Restriction::Self && zero_cost)
    throw Error(Errc::Config, "self-prediction is offered without the zero-cost projection only");
  const SolverOptions opt = solver_of(cfg);
  const RidgeSelection ridge = ridge_of(cfg);

  const auto series = build_managed<double>(sample, zero_cost);
  const auto view = series.view();
  SdfParams<double> params = estimate_mr(view, restriction);
  std::optional<CvResult> cv;
  std::optional<IterationTrace<double>> trace;
  const std::string solver = cfg.get_string("solver", "ridge");
  if (objective == Objective::MaxSharpe) {
    if (solver == "ridge") {
      double lambda = ridge.fixed;
      if (ridge.cross_validate) {
        cv = cross_validate(view, ridge.grid, ridge.folds, opt);
        lambda = cv->chosen;
      }
      auto fit = estimate_ms_ridge(view, lambda, params, opt);
      params = fit.params;
      trace = fit.trace;
    } else if (solver == "eigen") {
      if (ridge.cross_validate) throw Error(Errc::Config, "cross-validation applies to the ridge solver only");
      auto fit = estimate_ms_eigen(view, params, opt);
      params = fit.params;
      trace = fit.trace;
    } else {
      throw Error(Errc::Config, "solver must be ridge or eigen, got '" + solver + "'");
    }
    if (!trace->converged) {
      const std::string msg = "iteration stopped at max_iter=" + std::to_string(opt.max_iter) + " without converging";
      err << "warning: " << msg << '\n';
      rec.note(msg);
    }
  }

  {
    auto f = rec.open("lambda.csv");
    write_lambda(f, sample.signals, params.lambda);
  }
  {
    auto f = rec.open("psi.csv");
    write_psi(f, sample.assets, params.psi(), restriction == Restriction::Self);
  }
  Rows rows = {{"objective", to_string(objective)},
               {"restriction", to_string(restriction)},
               {"zero_cost", zero_cost ? "true" : "false"},
               {"ridge", format(params.ridge)},
               {"in_sample_sr2", format(in_sample_sr2(view, params.lambda, params.phi))},
               {"n_assets", std::to_string(sample.n_assets())},
               {"n_signals", std::to_string(sample.n_signals())},
               {"n_months", std::to_string(sample.T())},
               {"first_return_month", sample.pairs.front().return_date.str()},
               {"last_return_month", sample.pairs.back().return_date.str()}};
  if (trace) {
    rows.emplace_back("iterations", std::to_string(trace->iterations));
    rows.emplace_back("converged", trace->converged ? "true" : "false");
  }
  if (cv) rows.emplace_back("cv_chosen_ridge", format(cv->chosen));
  {
    auto f = rec.open("report.csv");
    write_report(f, rows);
  }
  if (cv) {
    auto f = rec.open("cv.csv");
    f << "ridge,fold,score\n";
    for (std::size_t g = 0; g < cv->grid.size(); ++g) {
      for (std::size_t k = 0; k < cv->per_fold[g].size(); ++k)
        f << format(cv->grid[g]) << ',' << k + 1 << ',' << format(cv->per_fold[g][k]) << '\n';
      f << format(cv->grid[g]) << ",mean," << format(cv->fold_scores[g]) << '\n';
    }
  }
  if (cfg.get_bool("dump_pi", false)) {
    auto f = rec.open("pi_mean.csv");
    f << "p,from_asset,to_asset,signal,value\n";
    const auto n = static_cast<std::size_t>(sample.n_assets());
    const auto& mean = series.mean;
    for (Eigen::Index p = 0; p < mean.rows(); ++p)
      for (Eigen::Index m = 0; m < mean.cols(); ++m)
        f << p << ',' << sample.assets[static_cast<std::size_t>(p) / n] << ','
          << sample.assets[static_cast<std::size_t>(p) % n] << ',' << sample.signals[static_cast<std::size_t>(m)]
          << ',' << format(mean(p, m)) << '\n';
  }
  auto meta = base_metadata("estimate", cfg, rec);
  meta["objective"] = to_string(objective);
  meta["restriction"] = to_string(restriction);
  meta["ridge"] = params.ridge;
  if (cv) {
    meta["cv"] = {{"grid", cv->grid}, {"mean_scores", cv->fold_scores}, {"chosen", cv->chosen}, {"folds", ridge.folds}};
  }
  if (trace) {
    std::vector<double> sr2;
    for (const auto& r : trace->records) sr2.push_back(r.sr2);
    meta["trace"] = {{"iterations", trace->iterations}, {"converged", trace->converged}, {"sr2", sr2}};
  }
  write_json(rec, meta);

  out << to_string(objective) << '/' << to_string(restriction) << " on " << sample.T()
      << " months: in-sample SR^2 " << format(in_sample_sr2(view, params.lambda, params.phi)) << '\n';
  if (cv) out << "cross-validated ridge: " << format(cv->chosen) << '\n';
  report_manifest(out, rec.finish());
  return 0;
}

int cmd_backtest(const KeyValueConfig& cfg, std::ostream& out, std::ostream& err) {
  RunRecorder rec("backtest", cfg, out_dir(cfg));
  const AlignedSample sample = load_sample(cfg, rec, err);

  BacktestConfig bc;
  bc.window_months = static_cast<int>(cfg.get_int("window", bc.window_months));
  bc.objective = objective_of(cfg);
  bc.restriction = restriction_of(cfg);
  bc.zero_cost = cfg.get_bool("zero_cost", false);
  if (cfg.has("leverage")) bc.leverage = cfg.get_double("leverage", 2.0);
  bc.ridge = ridge_of(cfg);
  if (cfg.has("oos_start")) bc.oos_start = MonthStamp::parse(required(cfg, "oos_start"));
  bc.warm_start = cfg.get_bool("warm_start", true);
  bc.solver = solver_of(cfg);
  bc.threads = static_cast<int>(cfg.get_int("threads", 1));
  const BacktestResult res = run(sample, bc);
  const std::size_t n_oos = res.dates.size();

  {
    auto f = rec.open("oos_returns.csv");
    f << "date,return\n";
    for (std::size_t k = 0; k < n_oos; ++k) f << res.dates[k].str() << ',' << format(res.oos_returns[k]) << '\n';
  }
  {
    auto f = rec.open("weights.csv");
    f << "date,asset,weight\n";
    for (std::size_t k = 0; k < n_oos; ++k)
      for (std::size_t i = 0; i < res.assets.size(); ++i)
        f << res.dates[k].str() << ',' << res.assets[i] << ','
          << format(res.weights_history[k].weights(static_cast<Eigen::Index>(i))) << '\n';
  }
  {
    auto f = rec.open("lambda_history.csv");
    f << "date,signal,value\n";
    for (std::size_t k = 0; k < n_oos; ++k)
      for (std::size_t m = 0; m < res.signals.size(); ++m)
        f << res.dates[k].str() << ',' << res.signals[m] << ','
          << format(res.params_history[k].lambda(static_cast<Eigen::Index>(m))) << '\n';
  }
  {
    auto f = rec.open("psi_history.csv");
    f << "date,from_asset,to_asset,value\n";
    for (std::size_t k = 0; k < n_oos; ++k) {
      const Eigen::MatrixXd psi = res.params_history[k].psi();
      for (Eigen::Index i = 0; i < psi.rows(); ++i)
        for (Eigen::Index j = 0; j < psi.cols(); ++j)
          f << res.dates[k].str() << ',' << res.assets[static_cast<std::size_t>(i)] << ','
            << res.assets[static_cast<std::size_t>(j)] << ',' << format(psi(i, j)) << '\n';
    }
  }
  {
    auto f = rec.open("fit_history.csv");
    f << "date,ridge,iterations,converged\n";
    for (std::size_t k = 0; k < n_oos; ++k)
      f << res.dates[k].str() << ',' << format(res.chosen_lambda_history[k]) << ',' << res.iterations[k] << ','
        << (res.converged[k] ? 1 : 0) << '\n';
  }
  std::vector<ConnectednessReport<double>> conn;
  for (std::size_t k = 0; k < n_oos; ++k) conn.push_back(connectedness(res.params_history[k].psi(), res.dates[k]));
  {
    auto rows = rec.open("connectedness.csv");
    auto totals = rec.open("connectedness_total.csv");
    write_connectedness(rows, totals, res.assets, conn);
  }

  const int trailing = static_cast<int>(cfg.get_int("trailing_window", 120));
  std::optional<DatedSeries> benchmark;
  if (auto p = optional_input(cfg, "benchmark", rec)) benchmark = load_dated_series(*p);
  if (n_oos >= static_cast<std::size_t>(std::max(trailing, 2))) {
    const auto points = trailing_sharpe(res, trailing, benchmark ? &*benchmark : nullptr);
    auto f = rec.open("trailing_sharpe.csv");
    f << "date,sharpe" << (benchmark ? ",benchmark_sharpe,ratio" : "") << '\n';
    for (const auto& p : points) {
      if (!p.sharpe || (benchmark && !p.ratio)) continue;
      f << p.date.str() << ',' << format(*p.sharpe);
      if (benchmark) f << ',' << format(*p.benchmark_sharpe) << ',' << format(*p.ratio);
      f << '\n';
    }
  } else {
    rec.note("trailing_sharpe.csv skipped: " + std::to_string(n_oos) + " out-of-sample months < trailing_window " +
             std::to_string(trailing));
  }

  std::vector<Eigen::VectorXd> w;
  for (const auto& x : res.weights_history) w.push_back(x.weights);
  Rows rows = {{"objective", to_string(bc.objective)},
               {"restriction", to_string(bc.restriction)},
               {"zero_cost", bc.zero_cost ? "true" : "false"},
               {"window_months", std::to_string(bc.window_months)},
               {"first_oos_month", res.dates.front().str()},
               {"last_oos_month", res.dates.back().str()}};
  std::optional<PerformanceReport> perf;
  if (n_oos >= 2) {
    perf = performance(res.oos_returns, w);
    append_performance(rows, "", *perf);
  }
  if (auto p = optional_input(cfg, "state", rec)) {
    const auto split = split_by_median(res, load_dated_series(*p));
    rows.emplace_back("state_median", format(split.median));
    rows.emplace_back("state_high_months", std::to_string(split.n_high));
    rows.emplace_back("state_low_months", std::to_string(split.n_low));
    if (split.high) append_performance(rows, "state_high_", *split.high);
    if (split.low) append_performance(rows, "state_low_", *split.low);
  }
  if (auto p = optional_input(cfg, "factors", rec)) {
    const auto span = factor_spanning(res.returns_series(), load_dated_frame(*p));
    auto f = rec.open("spanning.csv");
    write_spanning(f, span);
    rows.emplace_back("spanning_alpha_pct", format(span.alpha()));
    rows.emplace_back("spanning_alpha_t", format(span.fit.hac_t_stats(0)));
  }
  if (auto p = optional_input(cfg, "labels", rec)) {
    const auto groups = load_mapping(*p);
    std::vector<std::string> labels;
    for (const auto& a : res.assets) {
      auto it = groups.find(a);
      if (it == groups.end()) throw Error(Errc::LabelMismatch, "no group label for asset '" + a + "'");
      labels.push_back(it->second);
    }
    std::vector<BlockReport<double>> blocks;
    for (const auto& ph : res.params_history) blocks.push_back(block_average(ph.psi(), labels));
    auto f = rec.open("blocks.csv");
    write_blocks(f, res.dates, blocks);
  }
  std::map<std::string, std::string> themes;
  if (auto p = optional_input(cfg, "themes", rec)) themes = load_mapping(*p);
  {
    const auto imp = signal_importance(res.params_history, res.signals, themes);
    auto f = rec.open("importance.csv");
    write_importance(f, imp, themes);
  }
  {
    auto f = rec.open("report.csv");
    write_report(f, rows);
  }

  const auto not_converged = std::count(res.converged.begin(), res.converged.end(), false);
  if (not_converged > 0)
    rec.note(std::to_string(not_converged) + " windows stopped at max_iter without converging");
  auto meta = base_metadata("backtest", cfg, rec);
  meta["warm_start"] = bc.warm_start;
  meta["cross_validated"] = bc.ridge.cross_validate;
  meta["oos_months"] = n_oos;
  meta["windows_not_converged"] = not_converged;
  meta["assets"] = res.assets;
  meta["signals"] = res.signals;
  write_json(rec, meta);

  out << "backtest " << to_string(bc.objective) << '/' << to_string(bc.restriction) << ": " << n_oos
      << " out-of-sample months " << res.dates.front().str() << ".." << res.dates.back().str() << '\n';
  if (perf && perf->sharpe_annualized) out << "annualized Sharpe " << format(*perf->sharpe_annualized) << '\n';
  for (const auto& n : rec.notes()) out << "note: " << n << '\n';
  report_manifest(out, rec.finish());
  return 0;
}

int cmd_synth(const KeyValueConfig& cfg, std::ostream& out, std::ostream&) {
  KeyValueConfig dgp;
  for (const auto& [k, v] : cfg.entries())
    if (k != "out" && k != "threads" && k != "layout") dgp.set(k, v);
  const DgpSpec spec = dgp_spec_from_config(dgp);
  RunRecorder rec("synth", cfg, out_dir(cfg));
  const SyntheticData data = generate(spec);
  {
    auto f = rec.open("signals.csv");
    f.close();
    write_signals(data.signals, rec.dir() / "signals.csv", layout_of(cfg));
  }
  {
    auto f = rec.open("returns.csv");
    f.close();
    write_returns(data.returns, rec.dir() / "returns.csv");
  }
  if (spec.null_predictability()) {
    rec.note("null predictability: B = 0, returns are pure noise");
  } else if (spec.n_signals() == 1) {
    const auto oracle = oracle_solution(spec);
    auto f = rec.open("oracle_phi.csv");
    f << "p,from_asset,to_asset,phi_mr,phi_ms\n";
    const auto n = static_cast<std::size_t>(spec.n_assets());
    for (Eigen::Index p = 0; p < oracle.phi_mr.size(); ++p)
      f << p << ",A" << static_cast<std::size_t>(p) / n + 1 << ",A" << static_cast<std::size_t>(p) % n + 1 << ','
        << format(oracle.phi_mr(p)) << ',' << format(oracle.phi_ms(p)) << '\n';
  } else {
    rec.note("multi-signal DGP (signal m has slope loading_m * B); no closed-form oracle written");
  }
  auto meta = base_metadata("synth", cfg, rec);
  meta["n_assets"] = spec.n_assets();
  meta["n_signals"] = spec.n_signals();
  meta["months"] = spec.months;
  meta["null_predictability"] = spec.null_predictability();
  write_json(rec, meta);
  out << "synthetic panel: " << spec.n_assets() << " assets, " << spec.n_signals() << " signals, " << spec.months
      << " months, seed " << spec.seed << '\n';
  for (const auto& n : rec.notes()) out << "note: " << n << '\n';
  report_manifest(out, rec.finish());
  return 0;
}

namespace {

struct PsiHistory {
  std::vector<std::string> assets;
  std::vector<MonthStamp> dates;  // single default date when the file has no date column
  std::vector<Eigen::MatrixXd> psi;
};

PsiHistory load_psi(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const int dc = t.column("date");
  const int fc = t.require("from_asset"), tc = t.require("to_asset"), vc = t.require("value");
  PsiHistory h;
  std::map<std::string, Index> pos;
  for (const auto& row : t.rows)
    for (int c : {fc, tc})
      if (pos.emplace(row[static_cast<std::size_t>(c)], static_cast<Index>(pos.size())).second)
        h.assets.push_back(row[static_cast<std::size_t>(c)]);
  std::map<MonthStamp, Eigen::MatrixXd> by_date;
  const Index n = static_cast<Index>(h.assets.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const MonthStamp d = dc < 0 ? MonthStamp{} : MonthStamp::parse(row[static_cast<std::size_t>(dc)]);
    auto [it, fresh] = by_date.try_emplace(d, Eigen::MatrixXd::Zero(n, n));
    it->second(pos[row[static_cast<std::size_t>(fc)]], pos[row[static_cast<std::size_t>(tc)]]) =
        csv::to_double(row[static_cast<std::size_t>(vc)], t.where(r));
  }
  if (by_date.empty()) throw Error(Errc::ParseError, t.source + ": no rows");
  for (auto& [d, m] : by_date) {
    h.dates.push_back(d);
    h.psi.push_back(std::move(m));
  }
  return h;
}

std::vector<SdfParams<double>> load_lambda_history(const std::filesystem::path& path, std::vector<std::string>& signals) {
  const auto t = csv::read(path);
  const int dc = t.column("date"), sc = t.require("signal"), vc = t.require("value");
  std::map<std::string, Index> pos;
  for (const auto& row : t.rows)
    if (pos.emplace(row[static_cast<std::size_t>(sc)], static_cast<Index>(pos.size())).second)
      signals.push_back(row[static_cast<std::size_t>(sc)]);
  std::map<std::string, Eigen::VectorXd> by_date;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string d = dc < 0 ? "" : row[static_cast<std::size_t>(dc)];
    auto [it, fresh] = by_date.try_emplace(d, Eigen::VectorXd::Zero(static_cast<Index>(signals.size())));
    it->second(pos[row[static_cast<std::size_t>(sc)]]) = csv::to_double(row[static_cast<std::size_t>(vc)], t.where(r));
  }
  std::vector<SdfParams<double>> out;
  for (auto& [d, v] : by_date) {
    SdfParams<double> p;
    p.lambda = v;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

int cmd_analyze(const KeyValueConfig& cfg, std::ostream& out, std::ostream&) {
  RunRecorder rec("analyze", cfg, out_dir(cfg));
  bool did_something = false;
  std::optional<PsiHistory> psi;
  std::vector<ConnectednessReport<double>> conn;
  if (auto p = optional_input(cfg, "psi", rec)) {
    psi = load_psi(*p);
    for (std::size_t k = 0; k < psi->psi.size(); ++k) conn.push_back(connectedness(psi->psi[k], psi->dates[k]));
    auto rows = rec.open("connectedness.csv");
    auto totals = rec.open("connectedness_total.csv");
    write_connectedness(rows, totals, psi->assets, conn);
    out << "connectedness: " << conn.size() << " dates, mean TOTAL ";
    double s = 0;
    for (const auto& c : conn) s += c.total;
    out << format(s / static_cast<double>(conn.size())) << '\n';
    did_something = true;
  }
  if (auto p = optional_input(cfg, "labels", rec)) {
    if (!psi) throw Error(Errc::Config, "labels need a psi file");
    const auto groups = load_mapping(*p);
    std::vector<std::string> labels;
    for (const auto& a : psi->assets) {
      auto it = groups.find(a);
      if (it == groups.end()) throw Error(Errc::LabelMismatch, "no group label for asset '" + a + "'");
      labels.push_back(it->second);
    }
    std::vector<BlockReport<double>> blocks;
    for (const auto& m : psi->psi) blocks.push_back(block_average(m, labels));
    auto f = rec.open("blocks.csv");
    write_blocks(f, psi->dates, blocks);
  }
  if (auto p = optional_input(cfg, "lambda_history", rec)) {
    std::vector<std::string> signals;
    const auto history = load_lambda_history(*p, signals);
    std::map<std::string, std::string> themes;
    if (auto tp = optional_input(cfg, "themes", rec)) themes = load_mapping(*tp);
    const auto imp = signal_importance(history, signals, themes);
    auto f = rec.open("importance.csv");
    write_importance(f, imp, themes);
    did_something = true;
  }
  if (auto p = optional_input(cfg, "strategy", rec)) {
    const auto fp = optional_input(cfg, "factors", rec);
    if (!fp) throw Error(Errc::Config, "spanning needs both strategy and factors");
    const auto span = factor_spanning(load_dated_series(*p), load_dated_frame(*fp));
    auto f = rec.open("spanning.csv");
    write_spanning(f, span);
    out << "spanning alpha " << format(span.alpha()) << "% (NW t " << format(span.fit.hac_t_stats(0)) << ")\n";
    did_something = true;
  }
  if (auto p = optional_input(cfg, "characteristics", rec)) {
    if (!psi) throw Error(Errc::Config, "characteristic regressions need a psi history");
    const auto t = csv::read(*p);
    if (t.header.size() < 3 || t.header[0] != "date" || t.header[1] != "asset")
      throw Error(Errc::ParseError, t.source + ": header must be date,asset,<characteristics>");
    const std::vector<std::string> names(t.header.begin() + 2, t.header.end());
    const Index k = static_cast<Index>(names.size()), n = static_cast<Index>(psi->assets.size());
    std::map<std::string, Index> apos;
    for (Index i = 0; i < n; ++i) apos[psi->assets[static_cast<std::size_t>(i)]] = i;
    std::map<MonthStamp, Eigen::MatrixXd> chars;
    std::map<MonthStamp, Index> filled;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& row = t.rows[r];
      auto a = apos.find(row[1]);
      if (a == apos.end()) continue;
      const MonthStamp d = MonthStamp::parse(row[0]);
      auto [it, fresh] = chars.try_emplace(d, Eigen::MatrixXd::Zero(n, k));
      for (Index c = 0; c < k; ++c) it->second(a->second, c) = csv::to_double(row[static_cast<std::size_t>(c) + 2], t.where(r));
      ++filled[d];
    }
    std::vector<std::size_t> used;
    for (std::size_t d = 0; d < conn.size(); ++d) {
      auto it = filled.find(conn[d].date);
      if (it != filled.end() && it->second == n) used.push_back(d);
    }
    if (used.empty()) throw Error(Errc::NoOverlap, "no psi date has characteristics for every asset");
    auto f = rec.open("panel_reg.csv");
    f << "measure,characteristic,coef_x1000,t_stat\n";
    for (const std::string measure : {"from", "to", "net"}) {
      std::vector<Eigen::VectorXd> dep;
      std::vector<Eigen::MatrixXd> x;
      for (auto d : used) {
        const auto& c = conn[d];
        dep.push_back(measure == "from" ? c.from : measure == "to" ? c.to : c.net);
        x.push_back(chars.at(c.date));
      }
      const auto reg = cross_sectional_panel(dep, x);
      for (Index c = 0; c <= k; ++c)
        f << measure << ',' << (c == 0 ? std::string("intercept") : names[static_cast<std::size_t>(c - 1)]) << ','
          << format(1000.0 * reg.mean(c)) << ',' << format(reg.t_stats(c)) << '\n';
    }
    did_something = true;
  }
  if (!did_something)
    throw Error(Errc::Config, "analyze needs at least one of psi, lambda_history, strategy+factors");
  write_json(rec, base_metadata("analyze", cfg, rec));
  report_manifest(out, rec.finish());
  return 0;
}

int run_command(const std::string& command, const KeyValueConfig& config, std::ostream& out, std::ostream& err) {
  check_keys(command, config);
  KeyValueConfig cfg = effective(config);
  if (!cfg.has("seed")) cfg.set("seed", "1");
  if (command == "validate") return cmd_validate(cfg, out, err);
  if (command == "estimate") return cmd_estimate(cfg, out, err);
  if (command == "backtest") return cmd_backtest(cfg, out, err);
  if (command == "synth") return cmd_synth(cfg, out, err);
  if (command == "analyze") return cmd_analyze(cfg, out, err);
  throw Error(Errc::Config, "unknown command '" + command + "'");
}

std::vector<std::pair<std::string, std::string>> manifest_output_digests(const std::filesystem::path& manifest) {
  const auto m = KeyValueConfig::load(manifest);
  std::vector<std::pair<std::string, std::string>> out;
  const std::string prefix = "manifest.output.", suffix = ".sha256";
  for (const auto& key : m.keys_with_prefix(prefix))
    out.emplace_back(key.substr(prefix.size(), key.size() - prefix.size() - suffix.size()), *m.get(key));
  return out;
}

namespace {

struct FlagSpec {
  const char* flag;
  const char* key;
  const char* help;
  const char* fixed = nullptr;  // value set by a bare flag
};

const std::vector<FlagSpec>& flag_table() {
  static const std::vector<FlagSpec> t = {
      {"--out", "out", "output directory"},
      {"--seed", "seed", "random seed"},
      {"--threads", "threads", "worker cap for independent windows"},
      {"--signals", "signals", "signal panel CSV"},
      {"--returns", "returns", "excess return CSV (date,asset,ret_excess)"},
      {"--layout", "layout", "signal layout: long|wide"},
      {"--no-standardize", "standardize", "keep raw signal values", "false"},
      {"--first", "first", "first return month YYYY-MM"},
      {"--last", "last", "last return month YYYY-MM"},
      {"--objective", "objective", "ms|mr"},
      {"--restriction", "restriction", "cross|self"},
      {"--zero-cost", "zero_cost", "apply the zero-cost projection", "true"},
      {"--ridge", "ridge", "ridge penalty"},
      {"--cv", "cv", "cross-validate the ridge penalty", "true"},
      {"--folds", "cv_folds", "cross-validation folds"},
      {"--ridge-grid", "ridge_grid", "penalty grid as a list"},
      {"--tol", "tol", "convergence tolerance"},
      {"--max-iter", "max_iter", "iteration cap"},
      {"--solver", "solver", "ridge|eigen"},
      {"--dump-pi", "dump_pi", "write the mean managed-portfolio matrix", "true"},
      {"--window", "window", "rolling window in months"},
      {"--leverage", "leverage", "gross exposure target"},
      {"--oos-start", "oos_start", "first out-of-sample month"},
      {"--no-warm-start", "warm_start", "initialize every window from its MR solution", "false"},
      {"--trailing-window", "trailing_window", "months in the trailing Sharpe window"},
      {"--benchmark", "benchmark", "benchmark return series (date,value)"},
      {"--state", "state", "state series for the median split"},
      {"--factors", "factors", "factor returns (date,<factors>)"},
      {"--labels", "labels", "asset,group file"},
      {"--themes", "themes", "signal,theme file"},
      {"--psi", "psi", "psi file, optionally dated"},
      {"--lambda-history", "lambda_history", "date,signal,value file"},
      {"--strategy", "strategy", "strategy returns (date,return)"},
      {"--characteristics", "characteristics", "date,asset,<characteristics>"},
      {"--months", "months", "synthetic sample length"},
  };
  return t;
}

}  // namespace

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"crosspred: cross-predictive SDF strategies"};
  app.set_version_flag("--version", std::string(CROSSPRED_VERSION));
  app.require_subcommand(1);
  struct Sub {
    CLI::App* app;
    std::string config;
    std::string spec;
    std::vector<std::string> sets;
    std::vector<std::pair<std::string, std::string>> flags;
  };
  std::map<std::string, Sub> subs;
  const std::map<std::string, std::string> about = {
      {"validate", "check a signal/return panel pair"},
      {"estimate", "fit one window and write lambda.csv, psi.csv"},
      {"backtest", "rolling out-of-sample backtest"},
      {"synth", "simulate a panel from a linear DGP"},
      {"analyze", "connectedness, importance, spanning and characteristic regressions"}};
  for (const auto& [name, desc] : about) {
    auto& s = subs[name];
    s.app = app.add_subcommand(name, desc);
    s.app->add_option("--config", s.config, "key = value config file (a manifest.cfg works)");
    s.app->add_option("--set", s.sets, "override key=value")->take_all();
    if (name == "synth") s.app->add_option("--spec", s.spec, "DGP spec file merged under the config");
    const auto& allowed = allowed_keys(name);
    for (const auto& f : flag_table()) {
      if (std::find(allowed.begin(), allowed.end(), f.key) == allowed.end()) continue;
      auto* flags = &s.flags;
      const std::string key = f.key;
      if (f.fixed) {
        const std::string value = f.fixed;
        s.app->add_flag_callback(f.flag, [flags, key, value] { flags->emplace_back(key, value); }, f.help);
      } else {
        s.app->add_option_function<std::string>(
            f.flag, [flags, key](const std::string& v) { flags->emplace_back(key, v); }, f.help);
      }
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : exit_code(Errc::Config);
  }
  try {
    for (auto& [name, s] : subs) {
      if (!s.app->parsed()) continue;
      KeyValueConfig cfg;
      for (const auto& path : {s.spec, s.config}) {
        if (path.empty()) continue;
        const auto file = KeyValueConfig::load(path);
        for (const auto& [k, v] : file.entries()) cfg.set(k, v);
      }
      for (const auto& kv : s.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw Error(Errc::Config, "--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
      }
      for (const auto& [k, v] : s.flags) cfg.set(k, v);
      return run_command(name, cfg, out, err);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace crosspred::cli
