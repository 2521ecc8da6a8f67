#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

namespace ttcstop::detail {

template <std::size_t N>
using Vec = std::array<double, N>;

template <std::size_t N>
struct Box {
  Vec<N> lower;
  Vec<N> upper;

  Vec<N> project(Vec<N> p) const {
    for (std::size_t i = 0; i < N; ++i) p[i] = std::clamp(p[i], lower[i], upper[i]);
    return p;
  }
};

struct LmOptions {
  int max_iter = 200;
  double gradient_tolerance = 1e-10;
  double step_tolerance = 1e-14;
  double initial_damping = 1e-3;
};

template <std::size_t N>
struct LmResult {
  Vec<N> params{};
  double rss = std::numeric_limits<double>::infinity();
  double gradient_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

// Solves A x = b for a small symmetric positive definite A by Gaussian
// elimination with partial pivoting. Returns false if A is singular.
template <std::size_t N>
bool solve_dense(std::array<Vec<N>, N> a, Vec<N> b, Vec<N>& x) {
  for (std::size_t col = 0; col < N; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < N; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (!(std::abs(a[pivot][col]) > 0.0)) return false;
    std::swap(a[pivot], a[col]);
    std::swap(b[pivot], b[col]);
    for (std::size_t r = col + 1; r < N; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < N; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t i = N; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < N; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  for (double v : x) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

/// Box-constrained Levenberg-Marquardt on sum_i (y_i - model(x_i, p))^2.
///
/// `Model` provides `double value(double x, const Vec<N>&)` and
/// `Vec<N> gradient(double x, const Vec<N>&)` (partials of the model value).
/// Bounds are enforced by projecting every trial point onto the box. The
/// damping is Marquardt-scaled by diag(J^T J) and multiplied by 10 on a
/// rejected step, divided by 10 on an accepted one.
template <std::size_t N, class Model>
LmResult<N> levenberg_marquardt(const Model& model, std::span<const double> xs,
                                std::span<const double> ys, Vec<N> start,
                                const Box<N>& box, const LmOptions& opts) {
  auto rss_at = [&](const Vec<N>& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double r = ys[i] - model.value(xs[i], p);
      s += r * r;
    }
    return s;
  };

  LmResult<N> out;
  Vec<N> p = box.project(start);
  double rss = rss_at(p);
  double damping = opts.initial_damping;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    out.iterations = iter + 1;
    std::array<Vec<N>, N> jtj{};
    Vec<N> jtr{};
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const Vec<N> g = model.gradient(xs[i], p);
      const double r = ys[i] - model.value(xs[i], p);
      for (std::size_t a = 0; a < N; ++a) {
        jtr[a] += g[a] * r;
        for (std::size_t b = 0; b < N; ++b) jtj[a][b] += g[a] * g[b];
      }
    }

    // Projected gradient: components pinned against an active bound and
    // pushing outward do not count toward stationarity.
    double gnorm = 0.0;
    std::array<bool, N> pinned{};
    for (std::size_t a = 0; a < N; ++a) {
      const bool at_lower = p[a] <= box.lower[a] && jtr[a] < 0.0;
      const bool at_upper = p[a] >= box.upper[a] && jtr[a] > 0.0;
      pinned[a] = at_lower || at_upper;
      if (!pinned[a]) gnorm = std::max(gnorm, std::abs(jtr[a]));
    }
    out.gradient_norm = gnorm;
    if (gnorm <= opts.gradient_tolerance || rss == 0.0) {
      out.converged = true;
      break;
    }

    bool accepted = false;
    bool stalled = false;
    while (damping < 1e20) {
      // Pinned components are held fixed; the step is solved over the rest.
      std::array<Vec<N>, N> lhs = jtj;
      Vec<N> rhs = jtr;
      for (std::size_t a = 0; a < N; ++a) {
        lhs[a][a] += damping * std::max(jtj[a][a], 1e-300);
        if (!pinned[a]) continue;
        for (std::size_t b = 0; b < N; ++b) lhs[a][b] = lhs[b][a] = 0.0;
        lhs[a][a] = 1.0;
        rhs[a] = 0.0;
      }
      Vec<N> step{};
      if (!solve_dense<N>(lhs, rhs, step)) {
        damping *= 10.0;
        continue;
      }
      Vec<N> trial = p;
      for (std::size_t a = 0; a < N; ++a) trial[a] += step[a];
      trial = box.project(trial);

      double move = 0.0;
      double scale = 0.0;
      for (std::size_t a = 0; a < N; ++a) {
        move = std::max(move, std::abs(trial[a] - p[a]));
        scale = std::max(scale, std::abs(p[a]));
      }
      const double trial_rss = rss_at(trial);
      if (std::isfinite(trial_rss) && trial_rss < rss) {
        const double improvement = rss - trial_rss;
        p = trial;
        rss = trial_rss;
        damping = std::max(damping / 10.0, 1e-12);
        accepted = true;
        if (move <= opts.step_tolerance * (scale + opts.step_tolerance) ||
            improvement <= 1e-15 * rss) {
          stalled = true;
        }
        break;
      }
      if (move <= opts.step_tolerance * (scale + opts.step_tolerance)) {
        stalled = true;
        break;
      }
      damping *= 10.0;
    }
    if (stalled || !accepted) {
      // No representable descent step remains: p is a (bounded) local
      // minimum to working precision.
      out.converged = true;
      break;
    }
  }
  out.params = p;
  out.rss = rss;
  return out;
}

}  // namespace ttcstop::detail
