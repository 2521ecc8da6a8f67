#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ttcstop/checkpoint.hpp"
#include "ttcstop/error.hpp"
#include "ttcstop/fitting.hpp"
#include "ttcstop/passk.hpp"
#include "ttcstop/rng.hpp"

namespace ttcstop {

enum class HeadroomModel {
  // p_i = clamp(gain * A / 100 + delta_i, 0, 1), delta_i ~ U[delta_lo, delta_hi]
  kLinear,
  // p_i = 1 if gain * A / 100 >= (i + 1) / n_problems else 0: each problem is
  // either always or never solved, so Pass@K is flat in K.
  kThreshold,
};

constexpr std::string_view to_string(HeadroomModel m) {
  return m == HeadroomModel::kLinear ? "linear" : "threshold";
}

struct HeadroomSpec {
  HeadroomModel model = HeadroomModel::kLinear;
  double gain = 1.0;
  double delta_lo = -0.1;
  double delta_hi = 0.1;
};

/// A synthetic training run: a ground-truth learning curve plus a per-problem
/// solve-probability model driving the sampled correctness matrices.
struct SimSpec {
  ExpSatParams truth{10.0, 2e-21, 2.0};
  HeadroomSpec headroom;
  std::int64_t n_problems = 200;
  std::int64_t n_samples_per_checkpoint = 8;
  std::vector<double> checkpoint_flops;
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
  // Converts train_flops into the logged token count.
  double train_flops_per_token = 6.0 * 2.0 * 1.1e9;

  void validate() const {
    if (n_problems < 1) throw Error(ErrorCode::kSpecError, "n_problems must be >= 1");
    if (n_samples_per_checkpoint < 1) {
      throw Error(ErrorCode::kSpecError, "n_samples_per_checkpoint must be >= 1");
    }
    if (checkpoint_flops.empty()) {
      throw Error(ErrorCode::kSpecError, "checkpoint_flops is empty");
    }
    for (std::size_t i = 0; i < checkpoint_flops.size(); ++i) {
      if (!(checkpoint_flops[i] >= 0.0) ||
          (i > 0 && !(checkpoint_flops[i] > checkpoint_flops[i - 1]))) {
        throw Error(ErrorCode::kSpecError,
                    "checkpoint_flops must be nonnegative and strictly increasing");
      }
    }
    if (!(noise_sd >= 0.0)) throw Error(ErrorCode::kSpecError, "noise_sd must be >= 0");
    if (!(truth.a >= 0.0 && truth.b > 0.0 && truth.c >= 0.0 && truth.c <= 100.0)) {
      throw Error(ErrorCode::kSpecError, "truth parameters outside a>=0, b>0, 0<=c<=100");
    }
    if (!(headroom.delta_lo <= headroom.delta_hi)) {
      throw Error(ErrorCode::kSpecError, "delta_lo must be <= delta_hi");
    }
    if (!(train_flops_per_token > 0.0)) {
      throw Error(ErrorCode::kSpecError, "train_flops_per_token must be > 0");
    }
  }

  /// `count` checkpoints evenly spaced on (0, budget], ending at budget.
  static std::vector<double> uniform_schedule(double budget, std::int64_t count) {
    std::vector<double> out;
    for (std::int64_t i = 1; i <= count; ++i) {
      out.push_back(budget * static_cast<double>(i) / static_cast<double>(count));
    }
    return out;
  }
};

namespace sim_detail {
enum Stream : std::uint64_t { kDelta = 1, kNoise = 2, kSample = 3 };
}

/// Noise-free baseline accuracy at a checkpoint.
inline double true_accuracy(const SimSpec& spec, std::size_t checkpoint) {
  return project(spec.truth, spec.checkpoint_flops.at(checkpoint));
}

/// p_i for every problem at the given accuracy level.
inline std::vector<double> solve_probabilities(const SimSpec& spec, double accuracy) {
  const CounterRng rng(spec.seed);
  std::vector<double> p(static_cast<std::size_t>(spec.n_problems));
  const double level = spec.headroom.gain * accuracy / 100.0;
  for (std::int64_t i = 0; i < spec.n_problems; ++i) {
    if (spec.headroom.model == HeadroomModel::kThreshold) {
      const double threshold =
          static_cast<double>(i + 1) / static_cast<double>(spec.n_problems);
      p[i] = level >= threshold ? 1.0 : 0.0;
    } else {
      const double u = rng.uniform({sim_detail::kDelta, static_cast<std::uint64_t>(i)});
      const double delta =
          spec.headroom.delta_lo + (spec.headroom.delta_hi - spec.headroom.delta_lo) * u;
      p[i] = std::clamp(level + delta, 0.0, 1.0);
    }
  }
  return p;
}

/// Correctness draws at a checkpoint. `trial` selects an independent
/// replicate; trial 0 is the one gen_run writes.
inline CorrectnessMatrix sample_matrix(const SimSpec& spec, std::size_t checkpoint,
                                       std::uint64_t trial = 0) {
  const CounterRng rng(spec.seed);
  const auto p = solve_probabilities(spec, true_accuracy(spec, checkpoint));
  std::vector<ProblemSamples> rows(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    rows[i].problem_id = std::to_string(i);
    rows[i].outcomes.resize(static_cast<std::size_t>(spec.n_samples_per_checkpoint));
    for (std::int64_t s = 0; s < spec.n_samples_per_checkpoint; ++s) {
      const double u = rng.uniform({sim_detail::kSample, checkpoint, i,
                                    static_cast<std::uint64_t>(s), trial});
      rows[i].outcomes[s] = u < p[i] ? 1 : 0;
    }
  }
  return CorrectnessMatrix(std::move(rows));
}

inline std::vector<CheckpointObservation> gen_run(const SimSpec& spec) {
  spec.validate();
  const CounterRng rng(spec.seed);
  std::vector<CheckpointObservation> run;
  run.reserve(spec.checkpoint_flops.size());
  for (std::size_t j = 0; j < spec.checkpoint_flops.size(); ++j) {
    CheckpointObservation obs;
    obs.step = static_cast<std::int64_t>(j) + 1;
    obs.train_flops = spec.checkpoint_flops[j];
    obs.tokens = std::llround(obs.train_flops / spec.train_flops_per_token);
    const double noise = spec.noise_sd > 0.0
                             ? spec.noise_sd * rng.normal(sim_detail::kNoise, j)
                             : 0.0;
    obs.baseline_acc = std::clamp(true_accuracy(spec, j) + noise, 0.0, 100.0);
    obs.correctness = sample_matrix(spec, j);
    run.push_back(std::move(obs));
  }
  return run;
}

/// Expected Pass@k under the generative model, percentage points:
/// 100 * mean_i [1 - (1 - p_i)^k].
inline double true_passk(const SimSpec& spec, std::size_t checkpoint, std::int64_t k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  const auto p = solve_probabilities(spec, true_accuracy(spec, checkpoint));
  double sum = 0.0;
  for (double pi : p) sum += 1.0 - std::pow(1.0 - pi, static_cast<double>(k));
  return 100.0 * sum / static_cast<double>(p.size());
}

/// |mean over `trials` fresh matrices of the Pass@k estimate - true_passk|.
inline double estimator_convergence(const SimSpec& spec, std::size_t checkpoint,
                                    std::int64_t k, std::int64_t trials) {
  if (trials < 1) throw Error(ErrorCode::kInvalidArgument, "trials must be >= 1");
  double sum = 0.0;
  for (std::int64_t t = 0; t < trials; ++t) {
    sum += passk_over_dataset(sample_matrix(spec, checkpoint, static_cast<std::uint64_t>(t)),
                              k);
  }
  return std::abs(sum / static_cast<double>(trials) - true_passk(spec, checkpoint, k));
}

}  // namespace ttcstop
