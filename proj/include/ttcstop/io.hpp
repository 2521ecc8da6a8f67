#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttcstop/checkpoint.hpp"
#include "ttcstop/controller.hpp"
#include "ttcstop/cost_model.hpp"
#include "ttcstop/error.hpp"
#include "ttcstop/fitting.hpp"
#include "ttcstop/passk.hpp"
#include "ttcstop/simulator.hpp"

namespace ttcstop::io {

using nlohmann::json;

/// %.{digits}g rendering used by every report and CSV.
inline std::string fmt_num(double v, int digits = 4) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

namespace detail {

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open '" + path.string() + "'");
  return in;
}

[[noreturn]] inline void schema_error(const std::filesystem::path& path, std::size_t line,
                                      const std::string& what) {
  throw Error(ErrorCode::kSchemaError,
              path.string() + ":" + std::to_string(line) + ": " + what);
}

inline bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

inline std::vector<std::uint8_t> parse_outcomes(const json& arr,
                                                const std::filesystem::path& path,
                                                std::size_t line) {
  if (!arr.is_array() || arr.empty()) schema_error(path, line, "samples must be a nonempty array");
  std::vector<std::uint8_t> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (v.is_boolean()) out.push_back(v.get<bool>() ? 1 : 0);
    else if (v.is_number_integer() && (v.get<int>() == 0 || v.get<int>() == 1))
      out.push_back(static_cast<std::uint8_t>(v.get<int>()));
    else schema_error(path, line, "sample outcomes must be booleans");
  }
  return out;
}

template <class T>
T require(const json& obj, const char* key, const std::filesystem::path& path, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(path, line, std::string("missing field '") + key + "'");
  const bool ok = std::is_integral_v<T> ? it->is_number_integer() : it->is_number();
  if (!ok) schema_error(path, line, std::string("field '") + key + "' has the wrong type");
  return it->get<T>();
}

}  // namespace detail

/// Correctness matrix JSONL: {"problem_id": str, "samples": [bool, ...]} per line.
inline CorrectnessMatrix read_correctness(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::vector<ProblemSamples> rows;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (detail::blank(text)) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      detail::schema_error(path, line, e.what());
    }
    if (!obj.is_object()) detail::schema_error(path, line, "expected a JSON object");
    ProblemSamples row;
    if (auto it = obj.find("problem_id"); it != obj.end()) {
      row.problem_id = it->is_string() ? it->get<std::string>() : it->dump();
    } else {
      row.problem_id = std::to_string(rows.size());
    }
    auto s = obj.find("samples");
    if (s == obj.end()) detail::schema_error(path, line, "missing field 'samples'");
    row.outcomes = detail::parse_outcomes(*s, path, line);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) detail::schema_error(path, line, "correctness file has no rows");
  return CorrectnessMatrix(std::move(rows));
}

inline void write_correctness(std::ostream& out, const CorrectnessMatrix& m) {
  for (const auto& row : m.rows()) {
    json samples = json::array();
    for (auto v : row.outcomes) samples.push_back(v != 0);
    out << json{{"problem_id", row.problem_id}, {"samples", samples}}.dump() << '\n';
  }
}

inline CheckpointObservation parse_checkpoint(const std::string& text,
                                              const std::filesystem::path& path,
                                              std::size_t line) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    detail::schema_error(path, line, e.what());
  }
  if (!obj.is_object()) detail::schema_error(path, line, "expected a JSON object");
  CheckpointObservation obs;
  obs.step = detail::require<std::int64_t>(obj, "step", path, line);
  obs.tokens = detail::require<std::int64_t>(obj, "tokens", path, line);
  obs.train_flops = detail::require<double>(obj, "train_flops", path, line);
  obs.baseline_acc = detail::require<double>(obj, "baseline_acc", path, line);
  if (!(obs.train_flops >= 0.0)) detail::schema_error(path, line, "train_flops must be >= 0");
  if (!(obs.baseline_acc >= 0.0 && obs.baseline_acc <= 100.0)) {
    detail::schema_error(path, line, "baseline_acc must lie in [0, 100]");
  }
  if (auto it = obj.find("correctness"); it != obj.end() && !it->is_null()) {
    if (!it->is_array() || it->empty()) {
      detail::schema_error(path, line, "correctness must be a nonempty array of arrays");
    }
    std::vector<ProblemSamples> rows;
    for (const auto& r : *it) {
      rows.push_back({std::to_string(rows.size()), detail::parse_outcomes(r, path, line)});
    }
    obs.correctness = CorrectnessMatrix(std::move(rows));
  } else if (auto p = obj.find("correctness_path"); p != obj.end()) {
    if (!p->is_string()) detail::schema_error(path, line, "correctness_path must be a string");
    std::filesystem::path ref = p->get<std::string>();
    if (ref.is_relative()) ref = path.parent_path() / ref;
    obs.correctness = read_correctness(ref);
  }
  return obs;
}

/// Checkpoint log JSONL, one checkpoint per line:
/// {"step", "tokens", "train_flops", "baseline_acc", "correctness" | "correctness_path"}.
inline std::vector<CheckpointObservation> read_checkpoint_log(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::vector<CheckpointObservation> log;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (detail::blank(text)) continue;
    log.push_back(parse_checkpoint(text, path, line));
    if (log.size() > 1 && !(log.back().train_flops > log[log.size() - 2].train_flops)) {
      detail::schema_error(path, line, "train_flops must be strictly increasing");
    }
  }
  if (log.empty()) detail::schema_error(path, line == 0 ? 1 : line, "checkpoint log is empty");
  return log;
}

inline json to_json(const CheckpointObservation& obs) {
  json j{{"step", obs.step},
         {"tokens", obs.tokens},
         {"train_flops", obs.train_flops},
         {"baseline_acc", obs.baseline_acc}};
  if (obs.correctness) {
    json rows = json::array();
    for (const auto& row : obs.correctness->rows()) {
      json samples = json::array();
      for (auto v : row.outcomes) samples.push_back(v != 0);
      rows.push_back(std::move(samples));
    }
    j["correctness"] = std::move(rows);
  }
  return j;
}

inline void write_checkpoint_log(std::ostream& out,
                                 const std::vector<CheckpointObservation>& log) {
  for (const auto& obs : log) out << to_json(obs).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Config: one JSON object with optional "cost_model", "controller",
// "fit_options" and "sim_spec" sections.

struct Config {
  json cost_model = json::object();
  json controller = json::object();
  json fit_options = json::object();
  std::optional<json> sim_spec;
};

inline Config read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot open config '" + path.string() + "'");
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfigError, path.string() + ": " + e.what());
  }
  if (!root.is_object()) throw Error(ErrorCode::kConfigError, "config root must be an object");
  Config cfg;
  auto section = [&](const char* key, json& dst) {
    if (auto it = root.find(key); it != root.end()) {
      if (!it->is_object()) {
        throw Error(ErrorCode::kConfigError, std::string("section '") + key + "' must be an object");
      }
      dst = *it;
    }
  };
  section("cost_model", cfg.cost_model);
  section("controller", cfg.controller);
  section("fit_options", cfg.fit_options);
  if (root.contains("sim_spec")) {
    json s;
    section("sim_spec", s);
    cfg.sim_spec = s;
  }
  return cfg;
}

namespace detail {

template <class T>
T get_or(const json& obj, const char* key, T fallback, ErrorCode code = ErrorCode::kConfigError) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(code, std::string("key '") + key + "' has the wrong type");
  }
}

}  // namespace detail

inline CostModel cost_model_from_json(const json& j) {
  return CostModel(detail::get_or(j, "param_count", 1.1e9),
                   detail::get_or(j, "flops_per_infer_token", 0.0),
                   detail::get_or(j, "train_infer_ratio", CostModel::kDefaultTrainInferRatio),
                   detail::get_or<std::int64_t>(j, "val_query_count", 164),
                   detail::get_or(j, "avg_tokens_per_sample", 1536.0));
}

inline FitOptions fit_options_from_json(const json& j) {
  FitOptions f;
  f.tolerance = detail::get_or(j, "tolerance", f.tolerance);
  f.max_iter = detail::get_or(j, "max_iter", f.max_iter);
  f.b_floor = detail::get_or(j, "b_floor", f.b_floor);
  f.b_ceiling = detail::get_or(j, "b_ceiling", f.b_ceiling);
  f.k_ceiling = detail::get_or(j, "k_ceiling", f.k_ceiling);
  f.filter_tolerance = detail::get_or(j, "filter_tolerance", f.filter_tolerance);
  if (!(f.tolerance > 0.0) || f.max_iter < 1 || !(f.b_floor > 0.0) ||
      !(f.b_ceiling > f.b_floor) || !(f.k_ceiling > 0.0) || !(f.filter_tolerance >= 0.0)) {
    throw Error(ErrorCode::kConfigError, "fit_options out of range");
  }
  return f;
}

/// Controller settings; `budget` may be absent (0) and filled in by the caller.
inline ControllerConfig controller_from_json(const json& ctl, const json& cost,
                                             const json& fit) {
  ControllerConfig c;
  c.budget = detail::get_or(ctl, "budget", 0.0);
  c.patience = detail::get_or<std::int64_t>(ctl, "patience", c.patience);
  c.probe_ks = detail::get_or(ctl, "probe_ks", c.probe_ks);
  c.k_max = detail::get_or<std::int64_t>(ctl, "k_max", c.k_max);
  c.min_fit_points = detail::get_or<std::size_t>(ctl, "min_fit_points", c.min_fit_points);
  c.reset_on_improvement = detail::get_or(ctl, "reset_on_improvement", c.reset_on_improvement);
  c.cost_model = cost_model_from_json(cost);
  c.fit_options = fit_options_from_json(fit);
  return c;
}

inline SimSpec sim_spec_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kSpecError, "sim_spec must be an object");
  SimSpec s;
  const auto code = ErrorCode::kSpecError;
  s.truth.a = detail::get_or(j, "a", s.truth.a, code);
  s.truth.b = detail::get_or(j, "b", s.truth.b, code);
  s.truth.c = detail::get_or(j, "c", s.truth.c, code);
  const auto model = detail::get_or<std::string>(j, "headroom_model", "linear", code);
  if (model == "linear") s.headroom.model = HeadroomModel::kLinear;
  else if (model == "threshold") s.headroom.model = HeadroomModel::kThreshold;
  else throw Error(code, "headroom_model must be 'linear' or 'threshold'");
  s.headroom.gain = detail::get_or(j, "gain", s.headroom.gain, code);
  s.headroom.delta_lo = detail::get_or(j, "delta_lo", s.headroom.delta_lo, code);
  s.headroom.delta_hi = detail::get_or(j, "delta_hi", s.headroom.delta_hi, code);
  s.n_problems = detail::get_or<std::int64_t>(j, "n_problems", s.n_problems, code);
  s.n_samples_per_checkpoint =
      detail::get_or<std::int64_t>(j, "n_samples_per_checkpoint", s.n_samples_per_checkpoint, code);
  s.noise_sd = detail::get_or(j, "noise_sd", s.noise_sd, code);
  s.seed = detail::get_or<std::uint64_t>(j, "seed", s.seed, code);
  s.train_flops_per_token = detail::get_or(j, "train_flops_per_token", s.train_flops_per_token, code);
  if (j.contains("checkpoint_flops")) {
    s.checkpoint_flops = detail::get_or<std::vector<double>>(j, "checkpoint_flops", {}, code);
  } else {
    const double budget = detail::get_or(j, "budget", 0.0, code);
    const auto count = detail::get_or<std::int64_t>(j, "n_checkpoints", 0, code);
    if (!(budget > 0.0) || count < 1) {
      throw Error(code, "sim_spec needs checkpoint_flops or budget with n_checkpoints");
    }
    s.checkpoint_flops = SimSpec::uniform_schedule(budget, count);
  }
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// CSV

inline void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace,
                            int digits = 4) {
  out << "index,step,train_flops,baseline_acc,filtered_points,fit_status,a,b,c,fit_rss,"
         "f_b,sigmoid_L,sigmoid_k,sigmoid_x0,kstar,ttc_acc,best_ttc_acc,patience_counter,"
         "probe_flops,note\n";
  for (const auto& r : trace) {
    const auto n = [&](double v) { return fmt_num(v, digits); };
    out << r.index << ',' << r.step << ',' << n(r.train_flops) << ',' << n(r.baseline_acc) << ','
        << r.filtered_points << ',';
    if (r.fitted || r.exp_fit.status == FitStatus::kNonConvergence) {
      out << to_string(r.exp_fit.status) << ',' << n(r.exp_fit.a) << ',' << n(r.exp_fit.b) << ','
          << n(r.exp_fit.c) << ',' << n(r.exp_fit.rss) << ',';
    } else {
      out << ",,,,,";
    }
    out << (r.fitted ? n(r.f_b) : "") << ',';
    if (r.sigmoid) {
      out << n(r.sigmoid->L) << ',' << n(r.sigmoid->k) << ',' << n(r.sigmoid->x0) << ',';
    } else {
      out << ",,,";
    }
    out << r.kstar << ',' << (r.kstar > 0 ? n(r.ttc_acc) : "") << ','
        << (std::isfinite(r.best_ttc_acc) ? n(r.best_ttc_acc) : "") << ','
        << r.patience_counter << ',' << n(r.ledger.probe_flops) << ',' << r.note << '\n';
  }
}

inline void write_fit_csv(std::ostream& out, const std::vector<ResidualRow>& rows,
                          int digits = 6) {
  out << "x,observed_y,fitted_y,residual\n";
  for (const auto& r : rows) {
    out << fmt_num(r.x, digits) << ',' << fmt_num(r.observed, digits) << ','
        << fmt_num(r.fitted, digits) << ',' << fmt_num(r.residual, digits) << '\n';
  }
}

inline json to_json(const SavingsReport& s) {
  return {{"training_savings", s.training_savings},
          {"net_savings", s.net_savings},
          {"train_ratio", s.train_ratio}};
}

inline json to_json(const StopDecision& d) {
  return {{"stopped", d.stopped},
          {"reason", std::string(to_string(d.reason))},
          {"checkpoint_index", d.checkpoint_index},
          {"stop_step", d.stop_step},
          {"stop_train_flops", d.stop_train_flops},
          {"kstar", d.kstar},
          {"achieved_ttc_acc", d.achieved_ttc_acc},
          {"selection_fB", std::isfinite(d.selection_fB) ? json(d.selection_fB) : json()},
          {"projected_fB", std::isfinite(d.projected_fB) ? json(d.projected_fB) : json()},
          {"halt_index", d.halt_index},
          {"halt_train_flops", d.halt_train_flops},
          {"savings", to_json(d.savings)}};
}

}  // namespace ttcstop::io
