#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "ttcstop/detail/levenberg_marquardt.hpp"
#include "ttcstop/error.hpp"

namespace ttcstop {

/// One observed (abscissa, accuracy) pair. x is cumulative training FLOPs for
/// learning-curve fits and the sample count K for test-time-compute fits; y is
/// accuracy in percentage points.
struct AccuracyPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const AccuracyPoint&, const AccuracyPoint&) = default;
};

enum class FitStatus {
  kConverged,
  kDegenerate,      // flat data, no unique curve
  kNonConvergence,  // iteration cap hit with gradient above tolerance
  kNonMonotone,     // TTC series decreases somewhere in K
};

constexpr std::string_view to_string(FitStatus s) {
  switch (s) {
    case FitStatus::kConverged: return "converged";
    case FitStatus::kDegenerate: return "degenerate";
    case FitStatus::kNonConvergence: return "non_convergence";
    case FitStatus::kNonMonotone: return "non_monotone";
  }
  return "unknown";
}

struct FitOptions {
  double tolerance = 1e-10;  // projected-gradient stop
  int max_iter = 200;
  double b_floor = 1e-30;
  double b_ceiling = 1.0;
  double k_ceiling = 10.0;
  double filter_tolerance = 0.0;
};

/// y = a (1 - exp(-b x)) + c
struct ExpSatParams {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double rss = 0.0;
  std::size_t n_points = 0;
  FitStatus status = FitStatus::kConverged;

  bool ok() const noexcept { return status != FitStatus::kNonConvergence; }
};

/// y = L / (1 + exp(-k (K - x0)))
struct SigmoidParams {
  double L = 0.0;
  double k = 0.0;
  double x0 = 0.0;
  double rss = 0.0;
  std::size_t n_points = 0;
  FitStatus status = FitStatus::kConverged;

  bool ok() const noexcept { return status == FitStatus::kConverged; }
};

/// Keeps the points whose accuracy reaches the running maximum of all earlier
/// accuracies (minus `tolerance`). With the default zero tolerance the result
/// is nondecreasing in y and the first point always survives.
inline std::vector<AccuracyPoint> monotone_filter(
    std::span<const AccuracyPoint> points, double tolerance = 0.0) {
  std::vector<AccuracyPoint> kept;
  kept.reserve(points.size());
  double running_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i > 0 && !(points[i].x > points[i - 1].x)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "monotone_filter requires strictly increasing x");
    }
    if (points[i].y >= running_max - tolerance) kept.push_back(points[i]);
    running_max = std::max(running_max, points[i].y);
  }
  return kept;
}

inline double project(const ExpSatParams& p, double budget) {
  const double y = p.a * (1.0 - std::exp(-p.b * budget)) + p.c;
  return std::clamp(y, 0.0, 100.0);
}

inline double predict_ttc(const SigmoidParams& p, double samples) {
  const double y = p.L / (1.0 + std::exp(-p.k * (samples - p.x0)));
  return std::clamp(y, 0.0, 100.0);
}

namespace detail {

// Exponential saturation in scaled coordinates: s = x / x_scale and the rate
// is carried as u = log(b * x_scale).
struct ExpSatScaled {
  double value(double s, const Vec<3>& p) const {
    const double beta = std::exp(p[1]);
    return p[0] * (1.0 - std::exp(-beta * s)) + p[2];
  }
  Vec<3> gradient(double s, const Vec<3>& p) const {
    const double beta = std::exp(p[1]);
    const double e = std::exp(-beta * s);
    return {1.0 - e, p[0] * e * beta * s, 1.0};
  }
};

struct Logistic {
  double value(double k, const Vec<3>& p) const {
    return p[0] / (1.0 + std::exp(-p[1] * (k - p[2])));
  }
  Vec<3> gradient(double k, const Vec<3>& p) const {
    const double s = 1.0 / (1.0 + std::exp(-p[1] * (k - p[2])));
    const double ds = s * (1.0 - s);
    return {s, p[0] * ds * (k - p[2]), -p[0] * ds * p[1]};
  }
};

// Least squares for (a, c) at a fixed rate, clamped into the box. Used only to
// rank starting points for the nonlinear solve.
inline double exp_sat_profile(std::span<const double> s, std::span<const double> y,
                              double beta, double& a, double& c) {
  const double n = static_cast<double>(s.size());
  double sg = 0.0, sy = 0.0, sgg = 0.0, sgy = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double g = 1.0 - std::exp(-beta * s[i]);
    sg += g;
    sy += y[i];
    sgg += g * g;
    sgy += g * y[i];
  }
  const double det = n * sgg - sg * sg;
  if (std::abs(det) > 1e-300) {
    a = (n * sgy - sg * sy) / det;
    c = (sy - a * sg) / n;
  } else {
    a = 0.0;
    c = sy / n;
  }
  a = std::clamp(a, 0.0, 100.0);
  c = std::clamp(c, 0.0, 100.0);
  double rss = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double r = y[i] - a * (1.0 - std::exp(-beta * s[i])) - c;
    rss += r * r;
  }
  return rss;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace detail

/// Least-squares fit of y = a (1 - exp(-b x)) + c.
///
/// Runs Levenberg-Marquardt from the heuristic start (c = first y,
/// a = (max y - c) / (1 - 1/e), b = 1 / x-range) and from the best few rates
/// of a coarse log-spaced profile scan, keeping the lowest residual. Flat data
/// returns a flagged degenerate fit instead of throwing.
inline ExpSatParams fit_exp_saturation(std::span<const AccuracyPoint> points,
                                       const FitOptions& opts = {}) {
  if (points.size() < 3) {
    throw Error(ErrorCode::kTooFewPoints,
                "exponential saturation fit needs at least 3 points");
  }
  double x_min = points[0].x, x_max = points[0].x;
  double y_min = points[0].y, y_max = points[0].y, y_sum = 0.0;
  for (const auto& pt : points) {
    x_min = std::min(x_min, pt.x);
    x_max = std::max(x_max, pt.x);
    y_min = std::min(y_min, pt.y);
    y_max = std::max(y_max, pt.y);
    y_sum += pt.y;
  }
  if (!(x_max > x_min)) {
    throw Error(ErrorCode::kInvalidArgument, "x values are all equal");
  }

  ExpSatParams out;
  out.n_points = points.size();
  const double y_mean = y_sum / static_cast<double>(points.size());
  if (y_max - y_min <= 1e-12) {
    out.a = 0.0;
    out.b = opts.b_floor;
    out.c = y_mean;
    out.rss = 0.0;
    for (const auto& pt : points) out.rss += (pt.y - y_mean) * (pt.y - y_mean);
    out.status = FitStatus::kDegenerate;
    return out;
  }

  const double x_scale = x_max;
  std::vector<double> s(points.size()), y(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    s[i] = points[i].x / x_scale;
    y[i] = points[i].y;
  }
  const double u_lo = std::log(opts.b_floor * x_scale);
  const double u_hi = std::log(opts.b_ceiling * x_scale);
  const detail::Box<3> box{{0.0, u_lo, 0.0}, {100.0, u_hi, 100.0}};

  std::vector<detail::Vec<3>> starts;
  {
    const double c0 = std::clamp(points.front().y, 0.0, 100.0);
    const double a0 =
        std::clamp((y_max - c0) / (1.0 - std::exp(-1.0)), 0.0, 100.0);
    const double b0 = 1.0 / (x_max - x_min + 1e-300);
    starts.push_back({a0, std::clamp(std::log(b0 * x_scale), u_lo, u_hi), c0});
  }
  {
    struct Scan {
      double rss, u, a, c;
    };
    std::vector<Scan> scan;
    for (int i = 0; i <= 48; ++i) {
      const double u = std::clamp(std::log(1e-3) + i * std::log(1e6) / 48.0,
                                  u_lo, u_hi);
      double a = 0.0, c = 0.0;
      const double r = detail::exp_sat_profile(s, y, std::exp(u), a, c);
      scan.push_back({r, u, a, c});
    }
    std::sort(scan.begin(), scan.end(),
              [](const Scan& l, const Scan& r) { return l.rss < r.rss; });
    for (std::size_t i = 0; i < 3 && i < scan.size(); ++i) {
      starts.push_back({scan[i].a, scan[i].u, scan[i].c});
    }
  }

  detail::LmOptions lm;
  lm.max_iter = opts.max_iter;
  lm.gradient_tolerance = opts.tolerance;
  detail::LmResult<3> best;
  bool any_converged = false;
  for (const auto& start : starts) {
    auto r = detail::levenberg_marquardt<3>(detail::ExpSatScaled{}, s, y, start,
                                            box, lm);
    const bool better = (r.converged && !any_converged) ||
                        (r.converged == any_converged && r.rss < best.rss);
    if (better) {
      best = r;
      any_converged = any_converged || r.converged;
    }
  }

  out.a = best.params[0];
  out.b = std::exp(best.params[1]) / x_scale;
  out.c = best.params[2];
  out.rss = best.rss;
  out.status = any_converged ? FitStatus::kConverged : FitStatus::kNonConvergence;
  return out;
}

/// Least-squares fit of the logistic curve L / (1 + exp(-k (K - x0))) over a
/// handful of measured (K, accuracy) points.
///
/// Flat series come back kDegenerate and decreasing series kNonMonotone; in
/// both cases the parameters are not meaningful and callers fall back to
/// measured values.
inline SigmoidParams fit_sigmoid(std::span<const AccuracyPoint> points,
                                 const FitOptions& opts = {}) {
  if (points.size() < 3) {
    throw Error(ErrorCode::kTooFewPoints, "sigmoid fit needs at least 3 points");
  }
  std::vector<AccuracyPoint> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const AccuracyPoint& l, const AccuracyPoint& r) { return l.x < r.x; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (!(sorted[i].x > sorted[i - 1].x)) {
      throw Error(ErrorCode::kInvalidArgument, "sigmoid fit needs distinct K values");
    }
  }

  SigmoidParams out;
  out.n_points = sorted.size();
  double y_min = sorted[0].y, y_max = sorted[0].y;
  for (const auto& pt : sorted) {
    y_min = std::min(y_min, pt.y);
    y_max = std::max(y_max, pt.y);
  }
  if (y_max - y_min <= 1e-12) {
    out.status = FitStatus::kDegenerate;
    return out;
  }
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].y < sorted[i - 1].y) {
      out.status = FitStatus::kNonMonotone;
      return out;
    }
  }

  std::vector<double> ks(sorted.size()), y(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    ks[i] = sorted[i].x;
    y[i] = sorted[i].y;
  }
  const detail::Box<3> box{{1e-9, 1e-9, -1e6}, {100.0, opts.k_ceiling, 1e6}};

  auto logit = [](double v, double cap) {
    const double q = std::clamp(v / cap, 1e-6, 1.0 - 1e-6);
    return std::log(q / (1.0 - q));
  };
  const double k_span = ks.back() - ks.front();
  std::vector<detail::Vec<3>> starts;
  for (double l_mult : {1.05, 1.5, 3.0}) {
    const double l0 = std::min(100.0, l_mult * y_max);
    const double k0 = std::clamp(
        (logit(y.back(), l0) - logit(y.front(), l0)) / k_span, 1e-3, opts.k_ceiling);
    if (l_mult == 1.05) starts.push_back({l0, k0, detail::median(ks)});
    starts.push_back({l0, k0, ks.front() - logit(y.front(), l0) / k0});
  }

  detail::LmOptions lm;
  lm.max_iter = opts.max_iter;
  lm.gradient_tolerance = opts.tolerance;
  detail::LmResult<3> best;
  bool any_converged = false;
  for (const auto& start : starts) {
    auto r = detail::levenberg_marquardt<3>(detail::Logistic{}, ks, y, start, box, lm);
    const bool better = (r.converged && !any_converged) ||
                        (r.converged == any_converged && r.rss < best.rss);
    if (better) {
      best = r;
      any_converged = any_converged || r.converged;
    }
  }
  out.L = best.params[0];
  out.k = best.params[1];
  out.x0 = best.params[2];
  out.rss = best.rss;
  out.status = any_converged ? FitStatus::kConverged : FitStatus::kNonConvergence;
  return out;
}

/// Per-point diagnostics of a learning-curve fit.
struct ResidualRow {
  double x;
  double observed;
  double fitted;
  double residual;
};

inline std::vector<ResidualRow> residuals(const ExpSatParams& params,
                                          std::span<const AccuracyPoint> points) {
  std::vector<ResidualRow> rows;
  rows.reserve(points.size());
  for (const auto& pt : points) {
    const double f = params.a * (1.0 - std::exp(-params.b * pt.x)) + params.c;
    rows.push_back({pt.x, pt.y, f, pt.y - f});
  }
  return rows;
}

}  // namespace ttcstop
