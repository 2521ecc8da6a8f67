#pragma once

// Subcommand implementations for the ttcstop tool. Each cmd_* function throws
// ttcstop::Error on failure; run_guarded maps that onto the exit-code contract.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "ttcstop/breakeven.hpp"
#include "ttcstop/controller.hpp"
#include "ttcstop/error.hpp"
#include "ttcstop/fitting.hpp"
#include "ttcstop/io.hpp"
#include "ttcstop/simulator.hpp"

namespace ttcstop::cli {

using nlohmann::json;
namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kUsage = 2, kSchema = 3, kNumeric = 4 };

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSchemaError:
    case ErrorCode::kFileNotFound:
    case ErrorCode::kIoError:
    case ErrorCode::kOutOfOrderCheckpoint:
    case ErrorCode::kEmptyDataset:
    case ErrorCode::kKExceedsSamples:
      return kSchema;
    case ErrorCode::kTooFewPoints:
    case ErrorCode::kNonConvergence:
      return kNumeric;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kConfigError:
    case ErrorCode::kSpecError:
    case ErrorCode::kInvalidQuery:
      return kUsage;
  }
  return kUsage;
}

template <class Fn>
int run_guarded(Fn&& fn, std::ostream& err = std::cerr) {
  try {
    fn();
    return kOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

/// Rounds to `digits` significant figures.
inline json rounded(double v, int digits) {
  if (!std::isfinite(v)) return nullptr;
  return std::stod(io::fmt_num(v, digits));
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "failed writing '" + path.string() + "'");
}

struct CostOverrides {
  std::optional<double> param_count;
  std::optional<double> flops_per_infer_token;
  std::optional<double> train_infer_ratio;
  std::optional<std::int64_t> val_query_count;
  std::optional<double> avg_tokens_per_sample;

  void apply(json& section) const {
    if (param_count) section["param_count"] = *param_count;
    if (flops_per_infer_token) section["flops_per_infer_token"] = *flops_per_infer_token;
    if (train_infer_ratio) section["train_infer_ratio"] = *train_infer_ratio;
    if (val_query_count) section["val_query_count"] = *val_query_count;
    if (avg_tokens_per_sample) section["avg_tokens_per_sample"] = *avg_tokens_per_sample;
  }
};

// ---------------------------------------------------------------------------
// replay

struct ReplayOptions {
  fs::path log_path;
  std::optional<fs::path> config_path;
  std::optional<double> budget;
  std::optional<std::int64_t> patience;
  std::optional<std::vector<std::int64_t>> probe_ks;
  std::optional<std::int64_t> k_max;
  bool disable_improvement_reset = false;
  std::optional<double> filter_tolerance;
  CostOverrides cost;
  std::optional<fs::path> trace_path;
  std::optional<fs::path> report_path;
  bool compare_naive = false;
  double naive_epsilon = 0.0;
  int precision = 4;
};

struct RunReport {
  StopDecision decision;
  fs::path trace_path;
  fs::path report_path;
  SavingsReport savings;
  std::optional<NaiveStopResult> comparison;
  std::size_t trace_rows = 0;
  json report;
};

inline ControllerConfig resolve_controller(const ReplayOptions& opts,
                                           const std::vector<CheckpointObservation>& log) {
  io::Config cfg;
  if (opts.config_path) cfg = io::read_config(*opts.config_path);
  opts.cost.apply(cfg.cost_model);
  if (opts.filter_tolerance) cfg.fit_options["filter_tolerance"] = *opts.filter_tolerance;
  ControllerConfig c = io::controller_from_json(cfg.controller, cfg.cost_model, cfg.fit_options);
  if (opts.budget) c.budget = *opts.budget;
  if (!(c.budget > 0.0)) c.budget = log.back().train_flops;
  if (opts.patience) c.patience = *opts.patience;
  if (opts.probe_ks) c.probe_ks = *opts.probe_ks;
  if (opts.k_max) c.k_max = *opts.k_max;
  if (opts.disable_improvement_reset) c.reset_on_improvement = false;
  c.validate();
  return c;
}

inline json naive_json(const NaiveStopResult& n, std::int64_t patience, double eps, int digits) {
  json j{{"patience", patience},
         {"epsilon", eps},
         {"best_index", n.best_index},
         {"halt_index", n.halt_index},
         {"stopped_early", n.stopped_early},
         {"delta", rounded(n.delta, digits)},
         {"flops_saving", rounded(n.flops_saving, digits)},
         {"delta_ttc", n.delta_ttc ? rounded(*n.delta_ttc, digits) : json()}};
  return j;
}

inline RunReport cmd_replay(const ReplayOptions& opts, std::ostream& out) {
  const auto log = io::read_checkpoint_log(opts.log_path);
  const ControllerConfig cfg = resolve_controller(opts, log);
  const ReplayResult result = run_replay(log, cfg);

  for (const auto& row : result.trace) {
    if (row.note.find("skipped") != std::string::npos) {
      spdlog::warn("step {}: {}", row.step, row.note);
    } else if (!row.note.empty()) {
      spdlog::info("step {}: {}", row.step, row.note);
    }
    spdlog::debug("step {}: f(B)={} K*={} patience={}", row.step, row.f_b, row.kstar,
                  row.patience_counter);
  }

  RunReport report;
  report.decision = result.decision;
  report.savings = result.decision.savings;
  report.trace_rows = result.trace.size();
  report.trace_path = opts.trace_path.value_or(fs::path(opts.log_path.string() + ".trace.csv"));
  report.report_path =
      opts.report_path.value_or(fs::path(opts.log_path.string() + ".report.json"));

  {
    std::ostringstream csv;
    io::write_trace_csv(csv, result.trace, opts.precision);
    write_text(report.trace_path, csv.str());
  }

  const int d = opts.precision;
  const StopDecision& dec = result.decision;
  json j{{"decision",
          {{"stopped", dec.stopped},
           {"reason", std::string(to_string(dec.reason))},
           {"checkpoint_index", dec.checkpoint_index},
           {"stop_step", dec.stop_step},
           {"stop_train_flops", rounded(dec.stop_train_flops, d)},
           {"kstar", dec.kstar},
           {"achieved_ttc_acc", rounded(dec.achieved_ttc_acc, d)},
           {"selection_fB", rounded(dec.selection_fB, d)},
           {"projected_fB", rounded(dec.projected_fB, d)},
           {"halt_index", dec.halt_index},
           {"halt_train_flops", rounded(dec.halt_train_flops, d)}}},
         {"savings",
          {{"training_savings", rounded(dec.savings.training_savings, d)},
           {"net_savings", rounded(dec.savings.net_savings, d)},
           {"train_ratio", rounded(dec.savings.train_ratio, d)}}},
         {"budget", rounded(cfg.budget, d)},
         {"patience", cfg.patience},
         {"checkpoints_processed", result.trace.size()},
         {"trace_path", report.trace_path.string()}};

  if (opts.compare_naive) {
    report.comparison = naive_early_stop(log, cfg.patience, opts.naive_epsilon);
    j["naive"] = naive_json(*report.comparison, cfg.patience, opts.naive_epsilon, d);
  }
  report.report = j;
  write_text(report.report_path, j.dump(2) + "\n");

  const auto pct = [&](double v) { return io::fmt_num(100.0 * v, d) + "%"; };
  out << "decision: " << to_string(dec.reason) << '\n';
  out << "selected checkpoint: step " << dec.stop_step << " (train_flops "
      << io::fmt_num(dec.stop_train_flops, d) << "), K*=" << dec.kstar << '\n';
  out << "achieved TTC accuracy: " << io::fmt_num(dec.achieved_ttc_acc, d)
      << " pp, projected f(B): " << io::fmt_num(dec.projected_fB, d) << " pp\n";
  out << "halted at step " << log[dec.halt_index].step << "; training savings "
      << pct(dec.savings.training_savings) << ", net savings " << pct(dec.savings.net_savings)
      << ", r=" << io::fmt_num(dec.savings.train_ratio, d) << '\n';
  if (report.comparison) {
    const auto& n = *report.comparison;
    out << "naive early stopping (patience " << cfg.patience << "): delta "
        << io::fmt_num(n.delta, d) << " pp, FLOPs saving " << pct(n.flops_saving)
        << ", delta_TTC " << (n.delta_ttc ? io::fmt_num(*n.delta_ttc, d) + " pp" : "n/a")
        << '\n';
  }
  out << "trace: " << report.trace_path.string() << "\nreport: " << report.report_path.string()
      << '\n';
  return report;
}

// ---------------------------------------------------------------------------
// plan

struct PlanOptions {
  std::optional<double> r;
  std::optional<double> lambda;
  double lambda_base = 1.0;
  double train_tokens = 3e12;
  double sample_len = 1024.0;
  double train_infer_ratio = 6.0;
  bool json_output = false;
  int precision = 4;
};

inline std::vector<PlanRow> cmd_plan(const PlanOptions& opts, std::ostream& out) {
  std::vector<PlanRow> rows;
  if (opts.r || opts.lambda) {
    if (!opts.r || !opts.lambda) {
      throw Error(ErrorCode::kInvalidQuery, "--r and --lambda must be given together");
    }
    BreakEvenQuery q;
    q.r = *opts.r;
    q.lambda_ttc = *opts.lambda;
    q.lambda_base = opts.lambda_base;
    q.n_train_tokens = opts.train_tokens;
    q.sample_len_tokens = opts.sample_len;
    q.train_infer_ratio = opts.train_infer_ratio;
    rows.push_back({q, max_inference_tokens(q)});
  } else {
    for (const auto& [r, lambda] : kIllustrativePlanPoints) {
      BreakEvenQuery q;
      q.r = r;
      q.lambda_ttc = lambda;
      q.lambda_base = opts.lambda_base;
      q.n_train_tokens = opts.train_tokens;
      q.sample_len_tokens = opts.sample_len;
      q.train_infer_ratio = opts.train_infer_ratio;
      rows.push_back({q, max_inference_tokens(q)});
    }
  }

  if (opts.json_output) {
    json arr = json::array();
    for (const auto& row : rows) {
      arr.push_back({{"r", row.query.r},
                     {"lambda", row.query.lambda_ttc},
                     {"lambda_base", row.query.lambda_base},
                     {"n_train_tokens", row.query.n_train_tokens},
                     {"sample_len_tokens", row.query.sample_len_tokens},
                     {"max_infer_tokens", rounded(row.result.max_infer_tokens, opts.precision)},
                     {"max_samples", row.result.max_samples},
                     {"max_infer_tokens_display",
                      to_si_truncated(row.result.max_infer_tokens, 4, "T")},
                     {"max_samples_display",
                      to_si_truncated(static_cast<double>(row.result.max_samples))}});
    }
    out << json{{"rows", arr}}.dump(2) << '\n';
  } else {
    out << "| r | lambda | N_infer | Inference Samples |\n";
    out << "|---|---|---|---|\n";
    for (const auto& row : rows) {
      out << "| " << io::fmt_num(row.query.r, opts.precision) << " | "
          << io::fmt_num(row.query.lambda_ttc, opts.precision) << " | "
          << to_si_truncated(row.result.max_infer_tokens, 4, "T") << " | "
          << to_si_truncated(static_cast<double>(row.result.max_samples)) << " |\n";
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  fs::path spec_path;
  fs::path out_path;
  std::optional<std::uint64_t> seed;
  std::int64_t seeds = 1;
};

inline SimSpec load_sim_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kSpecError, "cannot open spec '" + path.string() + "'");
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kSpecError, path.string() + ": " + e.what());
  }
  if (root.is_object() && root.contains("sim_spec")) return io::sim_spec_from_json(root["sim_spec"]);
  return io::sim_spec_from_json(root);
}

inline fs::path seeded_path(const fs::path& base, std::uint64_t seed) {
  fs::path p = base;
  p.replace_filename(base.stem().string() + "_seed" + std::to_string(seed) +
                     base.extension().string());
  return p;
}

inline std::vector<fs::path> cmd_simulate(const SimulateOptions& opts, std::ostream& out) {
  SimSpec spec = load_sim_spec(opts.spec_path);
  if (opts.seed) spec.seed = *opts.seed;
  if (opts.seeds < 1) throw Error(ErrorCode::kSpecError, "--seeds must be >= 1");
  std::vector<fs::path> written;
  for (std::int64_t i = 0; i < opts.seeds; ++i) {
    SimSpec s = spec;
    s.seed = spec.seed + static_cast<std::uint64_t>(i);
    const fs::path target = opts.seeds == 1 ? opts.out_path : seeded_path(opts.out_path, s.seed);
    std::ostringstream buf;
    io::write_checkpoint_log(buf, gen_run(s));
    write_text(target, buf.str());
    out << "wrote " << s.checkpoint_flops.size() << " checkpoints to " << target.string() << '\n';
    written.push_back(target);
  }
  return written;
}

// ---------------------------------------------------------------------------
// fit

struct FitCommandOptions {
  fs::path log_path;
  std::optional<double> budget;
  bool no_filter = false;
  std::optional<fs::path> csv_path;
  std::optional<fs::path> json_path;
  std::optional<fs::path> config_path;
  std::optional<double> filter_tolerance;
  int precision = 4;
};

struct FitReport {
  ExpSatParams params;
  std::size_t points_total = 0;
  std::size_t points_used = 0;
  std::optional<double> f_b;
  fs::path csv_path;
  json summary;
};

inline FitReport cmd_fit(const FitCommandOptions& opts, std::ostream& out) {
  const auto log = io::read_checkpoint_log(opts.log_path);
  FitOptions fit_opts;
  if (opts.config_path) fit_opts = io::fit_options_from_json(io::read_config(*opts.config_path).fit_options);
  if (opts.filter_tolerance) fit_opts.filter_tolerance = *opts.filter_tolerance;

  std::vector<AccuracyPoint> points;
  for (const auto& obs : log) points.push_back({obs.train_flops, obs.baseline_acc});
  const std::vector<AccuracyPoint> used =
      opts.no_filter ? points : monotone_filter(points, fit_opts.filter_tolerance);
  if (used.size() < 3) {
    throw Error(ErrorCode::kTooFewPoints,
                std::to_string(used.size()) + " point(s) available, at least 3 required");
  }

  FitReport report;
  report.params = fit_exp_saturation(used, fit_opts);
  report.points_total = points.size();
  report.points_used = used.size();
  if (!report.params.ok()) {
    throw Error(ErrorCode::kNonConvergence, "learning-curve fit did not converge");
  }
  if (opts.budget) report.f_b = project(report.params, *opts.budget);

  report.csv_path = opts.csv_path.value_or(fs::path(opts.log_path.string() + ".fit.csv"));
  {
    std::ostringstream csv;
    io::write_fit_csv(csv, residuals(report.params, used), std::max(opts.precision, 6));
    write_text(report.csv_path, csv.str());
  }

  const int d = opts.precision;
  json j{{"a", rounded(report.params.a, d)},
         {"b", rounded(report.params.b, d)},
         {"c", rounded(report.params.c, d)},
         {"rss", rounded(report.params.rss, d)},
         {"status", std::string(to_string(report.params.status))},
         {"filtered", !opts.no_filter},
         {"points_total", report.points_total},
         {"points_used", report.points_used},
         {"f_B", report.f_b ? rounded(*report.f_b, d) : json()},
         {"csv_path", report.csv_path.string()}};
  report.summary = j;
  const std::string text = j.dump(2) + "\n";
  if (opts.json_path) write_text(*opts.json_path, text);
  out << text;
  return report;
}

}  // namespace ttcstop::cli
