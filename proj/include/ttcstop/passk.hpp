#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ttcstop/error.hpp"
#include "ttcstop/fitting.hpp"

namespace ttcstop {

/// Sampled outcomes for one validation problem.
struct ProblemSamples {
  std::string problem_id;
  std::vector<std::uint8_t> outcomes;  // 1 = correct

  std::int64_t n() const noexcept { return static_cast<std::int64_t>(outcomes.size()); }
  std::int64_t correct() const noexcept {
    return std::count_if(outcomes.begin(), outcomes.end(),
                         [](std::uint8_t v) { return v != 0; });
  }

  friend bool operator==(const ProblemSamples&, const ProblemSamples&) = default;
};

/// One row per validation problem, each with n_i >= 1 sampled outcomes.
class CorrectnessMatrix {
 public:
  CorrectnessMatrix() = default;
  explicit CorrectnessMatrix(std::vector<ProblemSamples> rows) : rows_(std::move(rows)) {
    for (const auto& r : rows_) {
      if (r.outcomes.empty()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "problem '" + r.problem_id + "' has no samples");
      }
    }
  }

  const std::vector<ProblemSamples>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }

  std::int64_t min_samples() const noexcept {
    std::int64_t m = std::numeric_limits<std::int64_t>::max();
    for (const auto& r : rows_) m = std::min(m, r.n());
    return rows_.empty() ? 0 : m;
  }

  friend bool operator==(const CorrectnessMatrix&, const CorrectnessMatrix&) = default;

 private:
  std::vector<ProblemSamples> rows_;
};

namespace detail {

// C(n, k) exactly; callers guarantee the value fits (n <= 56).
inline std::uint64_t binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::int64_t i = 0; i < k; ++i) {
    r = r * static_cast<std::uint64_t>(n - i) / static_cast<std::uint64_t>(i + 1);
  }
  return r;
}

// Every C(n, k) with n <= 56 is below 2^53, hence exact as a double.
inline constexpr std::int64_t kExactBinomialLimit = 56;

}  // namespace detail

/// Unbiased Pass@k: probability that a uniformly random k-subset of the n
/// samples holds at least one of the c correct ones, 1 - C(n-c, k) / C(n, k).
///
/// Small n uses the exact binomial ratio (one correctly rounded division);
/// larger n uses the product prod_{i<k} (n-c-i)/(n-i), which never forms a
/// factorial.
inline double pass_at_k(std::int64_t n, std::int64_t c, std::int64_t k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (k > n) throw Error(ErrorCode::kKExceedsSamples, "k exceeds sample count n");
  if (c < 0 || c > n) throw Error(ErrorCode::kInvalidArgument, "need 0 <= c <= n");
  if (n - c < k) return 1.0;
  if (n <= detail::kExactBinomialLimit) {
    const std::uint64_t total = detail::binomial(n, k);
    const std::uint64_t missing = detail::binomial(n - c, k);
    return static_cast<double>(total - missing) / static_cast<double>(total);
  }
  double miss = 1.0;
  for (std::int64_t i = 0; i < k; ++i) {
    miss *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
  }
  return 1.0 - miss;
}

/// Dataset Pass@k in percentage points. Rows are summed in order so the
/// result is bit-stable.
inline double passk_over_dataset(const CorrectnessMatrix& m, std::int64_t k) {
  if (m.empty()) throw Error(ErrorCode::kEmptyDataset, "correctness matrix is empty");
  if (k > m.min_samples()) {
    throw Error(ErrorCode::kKExceedsSamples,
                "k=" + std::to_string(k) + " exceeds the smallest row sample count " +
                    std::to_string(m.min_samples()));
  }
  double sum = 0.0;
  for (const auto& row : m.rows()) sum += pass_at_k(row.n(), row.correct(), k);
  return 100.0 * sum / static_cast<double>(m.size());
}

/// (k, Pass@k) for each requested k, all read off the one matrix: sampling
/// max(ks) responses per problem already yields every smaller k.
inline std::vector<AccuracyPoint> probe_series(const CorrectnessMatrix& m,
                                               std::span<const std::int64_t> ks) {
  std::vector<AccuracyPoint> out;
  out.reserve(ks.size());
  for (std::int64_t k : ks) {
    out.push_back({static_cast<double>(k), passk_over_dataset(m, k)});
  }
  return out;
}

}  // namespace ttcstop
