#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ttcstop/checkpoint.hpp"
#include "ttcstop/cost_model.hpp"
#include "ttcstop/error.hpp"
#include "ttcstop/fitting.hpp"
#include "ttcstop/passk.hpp"

namespace ttcstop {

struct ControllerConfig {
  double budget = 0.0;  // B, training FLOPs of the conventional run
  std::int64_t patience = 10;
  std::vector<std::int64_t> probe_ks{1, 2, 4};
  std::int64_t k_max = 0;  // 0: bounded by the FLOPs constraint alone
  std::size_t min_fit_points = 3;
  // Reset patience whenever the TTC accuracy at K* improves. When false only
  // the f(B) comparison resets or advances the counter.
  bool reset_on_improvement = true;
  CostModel cost_model{1.1e9};
  FitOptions fit_options;

  static constexpr std::int64_t kHardKCap = 1024;

  void validate() const {
    if (!(budget > 0.0)) throw Error(ErrorCode::kConfigError, "budget must be > 0");
    if (patience < 0) throw Error(ErrorCode::kConfigError, "patience must be >= 0");
    if (probe_ks.empty() || !std::is_sorted(probe_ks.begin(), probe_ks.end()) ||
        probe_ks.front() < 1 || probe_ks.back() < 2) {
      throw Error(ErrorCode::kConfigError,
                  "probe_ks must be nonempty, sorted, >= 1, with max >= 2");
    }
    if (std::adjacent_find(probe_ks.begin(), probe_ks.end()) != probe_ks.end()) {
      throw Error(ErrorCode::kConfigError, "probe_ks must be distinct");
    }
    if (min_fit_points < 3) throw Error(ErrorCode::kConfigError, "min_fit_points must be >= 3");
    if (k_max < 0) throw Error(ErrorCode::kConfigError, "k_max must be >= 0");
  }

  std::int64_t k_cap() const { return k_max > 0 ? std::min(k_max, kHardKCap) : kHardKCap; }
};

/// What is known about accuracy as a function of K at one checkpoint:
/// measured values for K = 1..measured.size() and, when the fit succeeded, a
/// sigmoid for anything beyond.
struct TtcCurve {
  std::vector<double> measured;
  std::optional<SigmoidParams> sigmoid;

  std::optional<double> at(std::int64_t k) const {
    if (k >= 1 && static_cast<std::size_t>(k) <= measured.size()) return measured[k - 1];
    if (sigmoid) return predict_ttc(*sigmoid, static_cast<double>(k));
    return std::nullopt;
  }
};

/// F_tr[t] + F_inf[t, K] < F_tr[B] + F_inf[B, 1].
inline bool flops_constraint_holds(double train_flops_t, std::int64_t k,
                                   const ControllerConfig& cfg) {
  return train_flops_t + eval_cost(k, cfg.cost_model) <
         cfg.budget + eval_cost(1, cfg.cost_model);
}

/// Smallest K in [1, k_cap] meeting both the total-FLOPs constraint and
/// accuracy(K) >= fB, or nullopt. The FLOPs side is monotone in K, so the
/// scan ends at the first K that breaks it.
inline std::optional<std::int64_t> find_min_kstar(double train_flops_t, const TtcCurve& curve,
                                                  double f_b, const ControllerConfig& cfg) {
  for (std::int64_t k = 1; k <= cfg.k_cap(); ++k) {
    if (!flops_constraint_holds(train_flops_t, k, cfg)) break;
    const auto acc = curve.at(k);
    if (!acc) break;
    if (*acc >= f_b) return k;
  }
  return std::nullopt;
}

enum class StopReason { kPatienceExhausted, kBudgetReached, kEndOfLog };

constexpr std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::kPatienceExhausted: return "PatienceExhausted";
    case StopReason::kBudgetReached: return "BudgetReached";
    case StopReason::kEndOfLog: return "EndOfLog";
  }
  return "Unknown";
}

struct StopDecision {
  bool stopped = false;
  StopReason reason = StopReason::kEndOfLog;
  // Selected (deployed) checkpoint.
  std::size_t checkpoint_index = 0;
  std::int64_t stop_step = 0;
  double stop_train_flops = 0.0;
  std::int64_t kstar = 1;
  double achieved_ttc_acc = 0.0;
  double selection_fB = 0.0;  // f(B) when K* was chosen at that checkpoint
  double projected_fB = 0.0;  // latest f(B) when the run halted
  // Where training actually halted (the savings are charged up to here).
  std::size_t halt_index = 0;
  double halt_train_flops = 0.0;
  SavingsReport savings;
};

/// One audit row per observed checkpoint.
struct TraceRow {
  std::size_t index = 0;
  std::int64_t step = 0;
  double train_flops = 0.0;
  double baseline_acc = 0.0;
  std::size_t filtered_points = 0;
  bool fitted = false;
  ExpSatParams exp_fit;
  double f_b = std::numeric_limits<double>::quiet_NaN();
  std::optional<SigmoidParams> sigmoid;
  std::vector<double> measured;  // TTC accuracy at K = 1..max probe
  std::int64_t kstar = 0;        // 0: no K satisfies both constraints
  double ttc_acc = std::numeric_limits<double>::quiet_NaN();
  double best_ttc_acc = -std::numeric_limits<double>::infinity();
  std::int64_t patience_counter = 0;
  FlopsLedger ledger;
  std::string note;
};

struct BestTtcCheckpoint {
  std::size_t index = 0;
  std::int64_t step = 0;
  double train_flops = 0.0;
  std::int64_t kstar = 1;
  double ttc_acc = 0.0;
  double f_b = 0.0;
};

struct ControllerState {
  double best_val_acc = -std::numeric_limits<double>::infinity();
  double best_ttc_val_acc = -std::numeric_limits<double>::infinity();
  std::int64_t patience_counter = 0;
  std::vector<CheckpointObservation> observed;
  std::vector<AccuracyPoint> filtered;
  FlopsLedger ledger;
  std::optional<BestTtcCheckpoint> best_ttc;
  double last_f_b = std::numeric_limits<double>::quiet_NaN();
};

/// Online TTC-aware early stopping.
///
/// Each checkpoint refits the learning curve on the fluctuation-filtered
/// baseline series, projects f(B), probes TTC accuracy at the configured K
/// values from the checkpoint's correctness matrix, fits the K-curve, and
/// looks for the minimal K* meeting both constraints. Patience is counted
/// only while the best TTC accuracy found so far is at or above f(B).
class EarlyStopController {
 public:
  explicit EarlyStopController(ControllerConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    state_.ledger.deploy_flops_per_pass = cfg_.cost_model.flops_per_eval_pass();
  }

  const ControllerConfig& config() const noexcept { return cfg_; }
  const ControllerState& state() const noexcept { return state_; }
  const std::vector<TraceRow>& trace() const noexcept { return trace_; }
  const std::optional<StopDecision>& decision() const noexcept { return decision_; }

  std::optional<StopDecision> observe(const CheckpointObservation& obs) {
    if (decision_) throw Error(ErrorCode::kInvalidArgument, "controller already stopped");
    if (!state_.observed.empty() && !(obs.train_flops > state_.observed.back().train_flops)) {
      throw Error(ErrorCode::kOutOfOrderCheckpoint,
                  "checkpoint step " + std::to_string(obs.step) +
                      " does not advance train_flops");
    }
    if (!(obs.baseline_acc >= 0.0 && obs.baseline_acc <= 100.0)) {
      throw Error(ErrorCode::kInvalidArgument, "baseline_acc outside [0, 100]");
    }

    const std::size_t index = state_.observed.size();
    state_.observed.push_back(obs);
    state_.ledger.train_flops = obs.train_flops;
    state_.best_val_acc = std::max(state_.best_val_acc, obs.baseline_acc);
    const double running_max =
        state_.filtered.empty() ? -std::numeric_limits<double>::infinity() : filtered_max_;
    if (obs.baseline_acc >= running_max - cfg_.fit_options.filter_tolerance) {
      state_.filtered.push_back({obs.train_flops, obs.baseline_acc});
    }
    filtered_max_ = std::max(running_max, obs.baseline_acc);

    TraceRow row;
    row.index = index;
    row.step = obs.step;
    row.train_flops = obs.train_flops;
    row.baseline_acc = obs.baseline_acc;
    row.filtered_points = state_.filtered.size();

    if (state_.filtered.size() >= cfg_.min_fit_points) check(obs, row);
    else row.note = "too few filtered points";

    row.best_ttc_acc = state_.best_ttc_val_acc;
    row.patience_counter = state_.patience_counter;
    row.ledger = state_.ledger;
    trace_.push_back(std::move(row));

    if (!decision_ && obs.train_flops >= cfg_.budget) {
      decision_ = budget_decision(index);
    }
    return decision_;
  }

  /// Decision for a log that ran out before stopping or reaching B.
  StopDecision end_of_log() const {
    if (decision_) return *decision_;
    StopDecision d = budget_decision(state_.observed.empty() ? 0 : state_.observed.size() - 1);
    d.stopped = false;
    d.reason = StopReason::kEndOfLog;
    return d;
  }

 private:
  void check(const CheckpointObservation& obs, TraceRow& row) {
    const ExpSatParams fit = fit_exp_saturation(state_.filtered, cfg_.fit_options);
    row.exp_fit = fit;
    if (!fit.ok()) {
      row.note = "learning-curve fit did not converge; checkpoint skipped";
      return;
    }
    row.fitted = true;
    const double f_b = project(fit, cfg_.budget);
    row.f_b = f_b;
    state_.last_f_b = f_b;

    TtcCurve curve = measure(obs, row);
    row.measured = curve.measured;
    row.sigmoid = curve.sigmoid;

    const auto kstar = find_min_kstar(obs.train_flops, curve, f_b, cfg_);
    if (kstar) {
      const double acc = *curve.at(*kstar);
      row.kstar = *kstar;
      row.ttc_acc = acc;
      const bool improved = acc > state_.best_ttc_val_acc;
      if (improved && cfg_.reset_on_improvement) state_.patience_counter = 0;
      if (improved) {
        state_.best_ttc_val_acc = acc;
        state_.best_ttc = BestTtcCheckpoint{row.index, obs.step, obs.train_flops, *kstar, acc,
                                            f_b};
      }
    }
    if (state_.best_ttc_val_acc < f_b) {
      state_.patience_counter = 0;
      return;
    }
    ++state_.patience_counter;
    if (state_.patience_counter >= cfg_.patience) decision_ = patience_decision(row.index);
  }

  TtcCurve measure(const CheckpointObservation& obs, TraceRow& row) {
    TtcCurve curve;
    if (!obs.correctness) {
      curve.measured.push_back(obs.baseline_acc);
      return curve;
    }
    const std::int64_t k_probe = cfg_.probe_ks.back();
    if (obs.correctness->min_samples() < k_probe) {
      throw Error(ErrorCode::kKExceedsSamples,
                  "checkpoint step " + std::to_string(obs.step) + " has fewer than " +
                      std::to_string(k_probe) + " samples per problem");
    }
    // One evaluation at the largest probe K pays for every smaller K.
    state_.ledger.probe_flops += eval_cost(k_probe, cfg_.cost_model);
    for (std::int64_t k = 1; k <= k_probe; ++k) {
      curve.measured.push_back(passk_over_dataset(*obs.correctness, k));
    }
    std::vector<AccuracyPoint> probes;
    for (std::int64_t k : cfg_.probe_ks) probes.push_back({static_cast<double>(k), curve.measured[k - 1]});
    if (probes.size() >= 3) {
      const SigmoidParams sig = fit_sigmoid(probes, cfg_.fit_options);
      if (sig.ok()) {
        curve.sigmoid = sig;
      } else {
        row.note = std::string("sigmoid fit ") + std::string(to_string(sig.status)) +
                   "; using measured values only";
      }
    }
    return curve;
  }

  FlopsLedger budget_ledger(double halt_flops) const {
    FlopsLedger at_budget;
    at_budget.train_flops = std::max(cfg_.budget, halt_flops);
    at_budget.deploy_flops_per_pass = state_.ledger.deploy_flops_per_pass;
    return at_budget;
  }

  StopDecision patience_decision(std::size_t halt_index) const {
    const BestTtcCheckpoint& best = *state_.best_ttc;
    StopDecision d;
    d.stopped = true;
    d.reason = StopReason::kPatienceExhausted;
    d.checkpoint_index = best.index;
    d.stop_step = best.step;
    d.stop_train_flops = best.train_flops;
    d.kstar = best.kstar;
    d.achieved_ttc_acc = best.ttc_acc;
    d.selection_fB = best.f_b;
    d.projected_fB = state_.last_f_b;
    d.halt_index = halt_index;
    d.halt_train_flops = state_.observed[halt_index].train_flops;
    d.savings = savings_report(state_.ledger, budget_ledger(d.halt_train_flops), d.kstar);
    return d;
  }

  StopDecision budget_decision(std::size_t index) const {
    StopDecision d;
    if (state_.observed.empty()) return d;
    const auto& last = state_.observed[index];
    d.stopped = true;
    d.reason = StopReason::kBudgetReached;
    d.checkpoint_index = index;
    d.stop_step = last.step;
    d.stop_train_flops = last.train_flops;
    d.kstar = 1;
    d.achieved_ttc_acc = last.baseline_acc;
    d.selection_fB = state_.last_f_b;
    d.projected_fB = state_.last_f_b;
    d.halt_index = index;
    d.halt_train_flops = last.train_flops;
    d.savings = savings_report(state_.ledger, budget_ledger(last.train_flops), 1);
    return d;
  }

  ControllerConfig cfg_;
  ControllerState state_;
  double filtered_max_ = -std::numeric_limits<double>::infinity();
  std::vector<TraceRow> trace_;
  std::optional<StopDecision> decision_;
};

struct ReplayResult {
  StopDecision decision;
  std::vector<TraceRow> trace;
};

/// Feeds the log through a fresh controller until it stops.
inline ReplayResult run_replay(std::span<const CheckpointObservation> log,
                               const ControllerConfig& cfg) {
  if (log.empty()) throw Error(ErrorCode::kSchemaError, "checkpoint log is empty");
  EarlyStopController controller(cfg);
  for (const auto& obs : log) {
    if (controller.observe(obs)) break;
  }
  return {controller.end_of_log(), controller.trace()};
}

/// Patience-on-validation-accuracy stopping that ignores TTC.
struct NaiveStopResult {
  std::size_t best_index = 0;   // checkpoint returned
  std::size_t halt_index = 0;   // where training stopped
  bool stopped_early = false;
  double best_acc = 0.0;
  double final_acc = 0.0;       // fully trained (last logged) checkpoint
  double delta = 0.0;           // best_acc - final_acc
  double flops_saving = 0.0;    // 1 - F_tr[halt] / F_tr[last]
  std::optional<double> delta_ttc;  // Pass@ttc_k(best) - final_acc
};

/// The counter grows on every checkpoint that fails to beat the best by more
/// than `epsilon` and training halts once it reaches `patience`; patience 0
/// therefore halts at the first non-improving checkpoint.
inline NaiveStopResult naive_early_stop(std::span<const CheckpointObservation> log,
                                        std::int64_t patience, double epsilon = 0.0,
                                        std::int64_t ttc_k = 8) {
  if (log.empty()) throw Error(ErrorCode::kSchemaError, "checkpoint log is empty");
  if (patience < 0) throw Error(ErrorCode::kInvalidArgument, "patience must be >= 0");
  NaiveStopResult out;
  double best = -std::numeric_limits<double>::infinity();
  std::int64_t counter = 0;
  out.halt_index = log.size() - 1;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (log[i].baseline_acc > best + epsilon) {
      best = log[i].baseline_acc;
      out.best_index = i;
      counter = 0;
      continue;
    }
    if (++counter >= patience) {
      out.halt_index = i;
      out.stopped_early = i + 1 < log.size();
      break;
    }
  }
  out.best_acc = log[out.best_index].baseline_acc;
  out.final_acc = log.back().baseline_acc;
  out.delta = out.best_acc - out.final_acc;
  out.flops_saving = 1.0 - log[out.halt_index].train_flops / log.back().train_flops;
  const auto& m = log[out.best_index].correctness;
  if (m && !m->empty() && m->min_samples() >= ttc_k) {
    out.delta_ttc = passk_over_dataset(*m, ttc_k) - out.final_acc;
  }
  return out;
}

}  // namespace ttcstop
