#pragma once

#include <cstdint>
#include <string>

#include "ttcstop/error.hpp"

namespace ttcstop {

/// Maps token counts onto training and inference FLOPs.
///
/// One inference token costs `flops_per_infer_token` (2N by default, the usual
/// forward-pass estimate); one training token costs `train_infer_ratio` times
/// that. A full validation pass touches `val_query_count` problems, each
/// sampled response consuming `avg_tokens_per_sample` tokens.
class CostModel {
 public:
  static constexpr double kDefaultTrainInferRatio = 6.0;

  /// `flops_per_infer_token <= 0` selects the 2 x param_count default.
  CostModel(double param_count, double flops_per_infer_token = 0.0,
            double train_infer_ratio = kDefaultTrainInferRatio,
            std::int64_t val_query_count = 164,
            double avg_tokens_per_sample = 1536.0)
      : param_count_(param_count),
        flops_per_infer_token_(flops_per_infer_token > 0.0
                                   ? flops_per_infer_token
                                   : 2.0 * param_count),
        train_infer_ratio_(train_infer_ratio),
        val_query_count_(val_query_count),
        avg_tokens_per_sample_(avg_tokens_per_sample) {
    if (!(param_count_ > 0.0)) {
      throw Error(ErrorCode::kConfigError, "param_count must be > 0");
    }
    if (!(flops_per_infer_token_ > 0.0)) {
      throw Error(ErrorCode::kConfigError, "flops_per_infer_token must be > 0");
    }
    if (!(train_infer_ratio_ > 0.0)) {
      throw Error(ErrorCode::kConfigError, "train_infer_ratio must be > 0");
    }
    if (val_query_count_ < 1) {
      throw Error(ErrorCode::kConfigError, "val_query_count must be >= 1");
    }
    if (!(avg_tokens_per_sample_ >= 1.0)) {
      throw Error(ErrorCode::kConfigError, "avg_tokens_per_sample must be >= 1");
    }
  }

  double param_count() const noexcept { return param_count_; }
  double flops_per_infer_token() const noexcept { return flops_per_infer_token_; }
  double train_infer_ratio() const noexcept { return train_infer_ratio_; }
  std::int64_t val_query_count() const noexcept { return val_query_count_; }
  double avg_tokens_per_sample() const noexcept { return avg_tokens_per_sample_; }

  double train_flops_per_token() const noexcept {
    return train_infer_ratio_ * flops_per_infer_token_;
  }

  /// Inference FLOPs of one validation pass drawing a single sample per query.
  double flops_per_eval_pass() const noexcept {
    return static_cast<double>(val_query_count_) * avg_tokens_per_sample_ *
           flops_per_infer_token_;
  }

 private:
  double param_count_;
  double flops_per_infer_token_;
  double train_infer_ratio_;
  std::int64_t val_query_count_;
  double avg_tokens_per_sample_;
};

inline double infer_flops(double tokens, const CostModel& model) {
  if (tokens < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "token count must be >= 0");
  }
  return tokens * model.flops_per_infer_token();
}

inline double train_flops(double tokens, const CostModel& model) {
  return infer_flops(tokens, model) * model.train_infer_ratio();
}

/// F_inf[t, K]: one validation pass with `samples` responses per query.
/// Exactly linear in K: eval_cost(K) == K * eval_cost(1) bit for bit.
inline double eval_cost(std::int64_t samples, const CostModel& model) {
  if (samples < 1) {
    throw Error(ErrorCode::kInvalidArgument, "sample count K must be >= 1");
  }
  return static_cast<double>(samples) * model.flops_per_eval_pass();
}

/// Cumulative FLOPs accounting for one run, as of some checkpoint.
struct FlopsLedger {
  double train_flops = 0.0;
  double probe_flops = 0.0;
  // F_inf[t, 1]; the deployment cost at K samples is K times this.
  double deploy_flops_per_pass = 0.0;

  double deploy_flops_per_eval(std::int64_t samples) const {
    if (samples < 1) {
      throw Error(ErrorCode::kInvalidArgument, "sample count K must be >= 1");
    }
    return static_cast<double>(samples) * deploy_flops_per_pass;
  }
};

struct SavingsReport {
  double training_savings = 0.0;  // 1 - F_tr[t] / F_tr[B]
  double net_savings = 0.0;       // includes probe overhead and deployment
  double train_ratio = 1.0;       // r = F_tr[t] / F_tr[B]
};

inline SavingsReport savings_report(const FlopsLedger& at_stop,
                                    const FlopsLedger& at_budget,
                                    std::int64_t kstar) {
  if (!(at_budget.train_flops > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "budget ledger must have positive training FLOPs");
  }
  if (at_stop.train_flops > at_budget.train_flops) {
    throw Error(ErrorCode::kInvalidArgument,
                "stop ledger exceeds budget ledger training FLOPs");
  }
  SavingsReport report;
  report.train_ratio = at_stop.train_flops / at_budget.train_flops;
  report.training_savings = 1.0 - report.train_ratio;
  const double spent = at_stop.train_flops + at_stop.probe_flops +
                       at_stop.deploy_flops_per_eval(kstar);
  const double baseline =
      at_budget.train_flops + at_budget.deploy_flops_per_eval(1);
  report.net_savings = 1.0 - spent / baseline;
  return report;
}

}  // namespace ttcstop
