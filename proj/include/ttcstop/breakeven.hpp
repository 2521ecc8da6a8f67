#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "ttcstop/error.hpp"

namespace ttcstop {

/// Inputs of the break-even bound.
struct BreakEvenQuery {
  double r = 1.0;              // TTC-aware training FLOPs / baseline, in (0, 1]
  double lambda_ttc = 1.0;     // per-token inference multiplier with TTC
  double lambda_base = 1.0;    // baseline deployment multiplier, >= 1
  double n_train_tokens = 0.0; // training tokens per refresh
  double sample_len_tokens = 1024.0;
  double train_infer_ratio = 6.0;

  void validate() const {
    if (!(r > 0.0 && r <= 1.0)) {
      throw Error(ErrorCode::kInvalidQuery, "r must lie in (0, 1]");
    }
    if (!(lambda_base >= 1.0)) {
      throw Error(ErrorCode::kInvalidQuery, "lambda_base must be >= 1");
    }
    if (!(lambda_ttc > lambda_base)) {
      throw Error(ErrorCode::kInvalidQuery,
                  "lambda_ttc must exceed lambda_base; TTC deployment is then "
                  "no dearer than the baseline and the bound is undefined");
    }
    if (!(n_train_tokens > 0.0)) {
      throw Error(ErrorCode::kInvalidQuery, "n_train_tokens must be > 0");
    }
    if (!(sample_len_tokens >= 1.0)) {
      throw Error(ErrorCode::kInvalidQuery, "sample_len_tokens must be >= 1");
    }
    if (!(train_infer_ratio > 0.0)) {
      throw Error(ErrorCode::kInvalidQuery, "train_infer_ratio must be > 0");
    }
  }
};

struct BreakEvenResult {
  double max_infer_tokens = 0.0;
  std::int64_t max_samples = 0;
};

/// Largest inference token count N_infer with
///   ratio * (1 - r) * N_train >= (lambda_ttc - lambda_base) * N_infer.
inline BreakEvenResult max_inference_tokens(const BreakEvenQuery& q) {
  q.validate();
  BreakEvenResult out;
  out.max_infer_tokens =
      q.train_infer_ratio * (1.0 - q.r) / (q.lambda_ttc - q.lambda_base) * q.n_train_tokens;
  out.max_samples =
      static_cast<std::int64_t>(std::floor(out.max_infer_tokens / q.sample_len_tokens));
  return out;
}

/// The lambda_base = 1 special case, N_infer <= 6 (1 - r) / (lambda - 1) N_train,
/// written out on its own.
inline double max_inference_tokens_unit_base(double r, double lambda,
                                             double n_train_tokens) {
  if (!(lambda > 1.0)) {
    throw Error(ErrorCode::kInvalidQuery, "lambda must exceed 1");
  }
  return 6.0 * (1.0 - r) / (lambda - 1.0) * n_train_tokens;
}

struct PlanRow {
  BreakEvenQuery query;
  BreakEvenResult result;
};

inline constexpr std::array<std::array<double, 2>, 4> kIllustrativePlanPoints{{
    {0.4, 8.0},
    {0.2, 16.0},
    {0.4, 1.2},
    {0.2, 1.2},
}};

/// Break-even budgets for the four illustrative (r, lambda) pairs.
inline std::vector<PlanRow> illustrative_table(double n_train_tokens = 3e12,
                                   double sample_len = 1024.0) {
  std::vector<PlanRow> rows;
  for (const auto& [r, lambda] : kIllustrativePlanPoints) {
    BreakEvenQuery q;
    q.r = r;
    q.lambda_ttc = lambda;
    q.n_train_tokens = n_train_tokens;
    q.sample_len_tokens = sample_len;
    rows.push_back({q, max_inference_tokens(q)});
  }
  return rows;
}

namespace detail {

inline std::string trim_decimal(std::string s) {
  if (s.find('.') == std::string::npos) return s;
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

}  // namespace detail

/// Renders `value / 10^(3*exponent)` truncated (not rounded) to three
/// significant figures with trailing zeros dropped, e.g. 9.375e8 -> "937M".
/// A relative nudge of 1e-9 absorbs representation error such as
/// 0.95999999... standing for 0.96.
inline std::string to_si_truncated(double value, int exponent, const char* suffix) {
  const double scaled = value / std::pow(10.0, 3 * exponent) * (1.0 + 1e-9);
  if (scaled == 0.0) return std::string("0") + suffix;
  const int digits_before = static_cast<int>(std::floor(std::log10(std::abs(scaled)))) + 1;
  const int decimals = std::max(0, 3 - digits_before);
  const double unit = std::pow(10.0, decimals);
  const double truncated = std::trunc(scaled * unit) / unit;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, truncated);
  return detail::trim_decimal(buf) + suffix;
}

/// Like to_si_truncated but picks the largest K/M/B/T unit not above the value.
inline std::string to_si_truncated(double value) {
  static constexpr const char* kSuffixes[] = {"", "K", "M", "B", "T"};
  int exponent = 0;
  while (exponent < 4 && std::abs(value) >= std::pow(10.0, 3 * (exponent + 1))) {
    ++exponent;
  }
  return to_si_truncated(value, exponent, kSuffixes[exponent]);
}

}  // namespace ttcstop
