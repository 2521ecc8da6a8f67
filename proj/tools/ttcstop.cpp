#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"

namespace {

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("ttcstop");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("TTCSTOP_LOG_LEVEL")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

void add_cost_flags(CLI::App* cmd, ttcstop::cli::CostOverrides& cost) {
  cmd->add_option("--param-count", cost.param_count, "Model parameter count N");
  cmd->add_option("--flops-per-infer-token", cost.flops_per_infer_token,
                  "Inference FLOPs per token (default 2N)");
  cmd->add_option("--train-infer-ratio", cost.train_infer_ratio,
                  "Training/inference FLOPs ratio per token");
  cmd->add_option("--val-query-count", cost.val_query_count, "Validation queries per probe");
  cmd->add_option("--avg-tokens-per-sample", cost.avg_tokens_per_sample,
                  "Average generated tokens per sample");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace ttcstop::cli;
  configure_logging();

  CLI::App app{"TTC-aware early stopping: replay, plan, simulate, fit"};
  app.require_subcommand(1);

  ReplayOptions replay;
  auto* r = app.add_subcommand("replay", "Replay a checkpoint log through the controller");
  r->add_option("log", replay.log_path, "Checkpoint log (JSONL)")->required();
  r->add_option("--config", replay.config_path, "Config file (JSON)");
  r->add_option("--budget", replay.budget, "Training FLOPs budget B (default: last checkpoint)");
  r->add_option("--patience", replay.patience, "Patience p");
  r->add_option("--probe-ks", replay.probe_ks, "Probe sample counts")->delimiter(',');
  r->add_option("--k-max", replay.k_max, "Largest K considered for K*");
  r->add_flag("--no-improvement-reset", replay.disable_improvement_reset,
              "Do not reset patience when baseline accuracy improves");
  r->add_option("--filter-tolerance", replay.filter_tolerance, "Monotone filter slack (pp)");
  r->add_option("--trace", replay.trace_path, "Trace CSV path");
  r->add_option("--report", replay.report_path, "JSON report path");
  r->add_flag("--compare-naive", replay.compare_naive, "Also run naive early stopping");
  r->add_option("--epsilon", replay.naive_epsilon, "Naive early-stopping improvement threshold");
  r->add_option("--precision", replay.precision, "Significant digits in outputs")
      ->check(CLI::Range(1, 17));
  add_cost_flags(r, replay.cost);

  PlanOptions plan;
  auto* p = app.add_subcommand("plan", "Break-even inference budgets");
  p->add_option("--r", plan.r, "Training FLOPs ratio r in (0, 1]");
  p->add_option("--lambda", plan.lambda, "TTC inference multiplier");
  p->add_option("--lambda-base", plan.lambda_base, "Baseline inference multiplier");
  p->add_option("--train-tokens", plan.train_tokens, "Training tokens per refresh");
  p->add_option("--sample-len", plan.sample_len, "Tokens per inference sample");
  p->add_option("--train-infer-ratio", plan.train_infer_ratio, "Training/inference FLOPs ratio");
  p->add_flag("--json", plan.json_output, "Emit JSON");
  p->add_option("--precision", plan.precision, "Significant digits in JSON")
      ->check(CLI::Range(1, 17));

  SimulateOptions sim;
  auto* s = app.add_subcommand("simulate", "Generate a synthetic checkpoint log");
  s->add_option("--spec", sim.spec_path, "Simulation spec (JSON)")->required();
  s->add_option("--out", sim.out_path, "Output JSONL path")->required();
  s->add_option("--seed", sim.seed, "Override the simulation seed");
  s->add_option("--seeds", sim.seeds, "Number of consecutive seeds to generate");

  FitCommandOptions fit;
  auto* f = app.add_subcommand("fit", "Fit the learning curve of a checkpoint log");
  f->add_option("log", fit.log_path, "Checkpoint log (JSONL)")->required();
  f->add_option("--config", fit.config_path, "Config file (JSON)");
  f->add_option("--budget", fit.budget, "Report projected accuracy at this budget");
  f->add_flag("--no-filter", fit.no_filter, "Fit all points without fluctuation filtering");
  f->add_option("--filter-tolerance", fit.filter_tolerance, "Monotone filter slack (pp)");
  f->add_option("--csv", fit.csv_path, "Residual CSV path");
  f->add_option("--json", fit.json_path, "Also write the fit summary here");
  f->add_option("--precision", fit.precision, "Significant digits in outputs")
      ->check(CLI::Range(1, 17));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (*r) return run_guarded([&] { cmd_replay(replay, std::cout); });
  if (*p) return run_guarded([&] { cmd_plan(plan, std::cout); });
  if (*s) return run_guarded([&] { cmd_simulate(sim, std::cout); });
  if (*f) return run_guarded([&] { cmd_fit(fit, std::cout); });
  return kUsage;
}
