#pragma once

// Independent oracles and scenario builders shared by the unit tests and the
// acceptance binary. Nothing here calls the optimizers it is used to check.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "ttcstop/fitting.hpp"
#include "ttcstop/simulator.hpp"

namespace ttcstop::test_support {

/// Pass@k by enumerating every k-subset of n samples, c of them correct.
/// Returns the exact fraction of subsets containing a correct sample.
inline double passk_enumerate(int n, int c, int k) {
  std::int64_t hit = 0;
  std::int64_t total = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != k) continue;
    ++total;
    // samples 0..c-1 are the correct ones
    if ((mask & ((1u << c) - 1u)) != 0) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

inline double exp_sat_rss(double a, double b, double c, const std::vector<AccuracyPoint>& pts) {
  double rss = 0.0;
  for (const auto& p : pts) {
    const double r = p.y - (a * (1.0 - std::exp(-b * p.x)) + c);
    rss += r * r;
  }
  return rss;
}

struct GridOptimum {
  double a = 0.0, b = 0.0, c = 0.0, rss = std::numeric_limits<double>::infinity();
};

/// Dense grid over a in [0,100], c in [0,100] and log-spaced b spanning
/// [b_lo, b_hi], `res` values per axis.
inline GridOptimum grid_search(const std::vector<AccuracyPoint>& pts, double b_lo, double b_hi,
                               int res = 200) {
  GridOptimum best;
  std::vector<double> basis(pts.size());
  for (int ib = 0; ib < res; ++ib) {
    const double b = b_lo * std::pow(b_hi / b_lo, static_cast<double>(ib) / (res - 1));
    for (std::size_t i = 0; i < pts.size(); ++i) basis[i] = 1.0 - std::exp(-b * pts[i].x);
    for (int ia = 0; ia < res; ++ia) {
      const double a = 100.0 * ia / (res - 1);
      for (int ic = 0; ic < res; ++ic) {
        const double c = 100.0 * ic / (res - 1);
        double rss = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
          const double r = pts[i].y - a * basis[i] - c;
          rss += r * r;
        }
        if (rss < best.rss) best = {a, b, c, rss};
      }
    }
  }
  return best;
}

/// A saturating run whose K-curve has real headroom over the final baseline.
/// The learning curve is flat by about a quarter of the budget.
inline SimSpec headroom_run(std::uint64_t seed) {
  std::mt19937_64 gen(seed * 7919 + 11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SimSpec s;
  const double budget = 1e21;
  s.truth.a = 20.0 + 20.0 * u(gen);
  s.truth.c = 2.0 + 4.0 * u(gen);
  s.truth.b = (20.0 + 10.0 * u(gen)) / budget;
  s.headroom.model = HeadroomModel::kLinear;
  s.headroom.gain = 1.0;
  s.headroom.delta_lo = -0.1;
  s.headroom.delta_hi = 0.1;
  s.n_problems = 200;
  s.n_samples_per_checkpoint = 8;
  s.checkpoint_flops = SimSpec::uniform_schedule(budget, 100);
  s.noise_sd = 0.2;
  s.seed = seed;
  return s;
}

/// A run where sampling more adds nothing: each problem is always or never
/// solved, so Pass@K equals Pass@1 and never beats the final baseline.
inline SimSpec zero_headroom_run(std::uint64_t seed) {
  std::mt19937_64 gen(seed * 104729 + 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SimSpec s;
  const double budget = 1e21;
  s.truth.a = 20.0 + 20.0 * u(gen);
  s.truth.c = 2.0 + 4.0 * u(gen);
  s.truth.b = (1.0 + 1.0 * u(gen)) / budget;
  s.headroom.model = HeadroomModel::kThreshold;
  s.n_problems = 200;
  s.n_samples_per_checkpoint = 8;
  s.checkpoint_flops = SimSpec::uniform_schedule(budget, 100);
  s.noise_sd = 0.2;
  s.seed = seed;
  return s;
}

}  // namespace ttcstop::test_support
