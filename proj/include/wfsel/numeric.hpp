#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace wfsel {

struct RootResult {
  double root = 0.0;
  double f_root = 0.0;
  double lo = 0.0;  // final bracket
  double hi = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct RootOptions {
  double f_tol = 1e-8;
  double x_tol = 1e-6;
  int max_iter = 200;
};

/// Root of f on [lo, hi] where f(lo) and f(hi) differ in sign. Regula falsi
/// with the Illinois modification, falling back to bisection whenever the
/// interpolated point does not shrink the bracket fast enough. The bracket
/// always contains a sign change.
template <class F>
RootResult bracketed_root(F&& f, double lo, double hi, double f_lo,
                          double f_hi, const RootOptions& opt = {}) {
  RootResult r;
  if (f_lo == 0.0) return {lo, 0.0, lo, lo, 0, true};
  if (f_hi == 0.0) return {hi, 0.0, hi, hi, 0, true};
  if ((f_lo > 0.0) == (f_hi > 0.0)) {
    throw std::invalid_argument("bracketed_root: no sign change on bracket");
  }
  int side = 0;
  double best_x = lo, best_f = f_lo;
  for (r.iterations = 0; r.iterations < opt.max_iter; ++r.iterations) {
    const double width = hi - lo;
    double x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
    // Keep interpolated steps away from the ends; bisect after a stall.
    const double guard = 0.01 * width;
    if (!(x > lo + guard && x < hi - guard) || std::abs(side) >= 3) {
      x = 0.5 * (lo + hi);
      side = 0;
    }
    const double fx = f(x);
    if (std::abs(fx) < std::abs(best_f)) {
      best_x = x;
      best_f = fx;
    }
    if (fx == 0.0) {
      lo = hi = x;
      break;
    }
    if ((fx > 0.0) == (f_lo > 0.0)) {
      lo = x;
      f_lo = fx;
      if (side < 0) f_hi *= 0.5;
      side = side < 0 ? side - 1 : -1;
    } else {
      hi = x;
      f_hi = fx;
      if (side > 0) f_lo *= 0.5;
      side = side > 0 ? side + 1 : 1;
    }
    if (std::abs(fx) < opt.f_tol || hi - lo < opt.x_tol) break;
  }
  r.lo = lo;
  r.hi = hi;
  if (std::abs(best_f) < opt.f_tol || hi - lo < opt.x_tol) r.converged = true;
  r.root = (best_x >= lo && best_x <= hi) ? best_x : 0.5 * (lo + hi);
  r.f_root = best_f;
  return r;
}

template <class F>
RootResult bracketed_root(F&& f, double lo, double hi,
                          const RootOptions& opt = {}) {
  const double f_lo = f(lo);
  const double f_hi = f(hi);
  return bracketed_root(f, lo, hi, f_lo, f_hi, opt);
}

struct GoldenResult {
  double x = 0.0;
  double value = 0.0;
  int evaluations = 0;
};

/// Maximizes a unimodal f on [lo, hi] to an absolute tolerance in x.
template <class F>
GoldenResult golden_section_max(F&& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  int evals = 2;
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
    ++evals;
  }
  GoldenResult r;
  r.evaluations = evals;
  if (fc >= fd) {
    r.x = c;
    r.value = fc;
  } else {
    r.x = d;
    r.value = fd;
  }
  return r;
}

/// Linear-interpolation quantile (R type 7) of an ascending sample. Infinite
/// entries are allowed and propagate into the tails.
inline double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  p = std::clamp(p, 0.0, 1.0);
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= sorted.size() || frac == 0.0) return sorted[i];
  const double a = sorted[i], b = sorted[i + 1];
  if (std::isinf(a) || std::isinf(b)) return frac < 0.5 ? a : b;
  return a + frac * (b - a);
}

inline double quantile(std::vector<double> sample, double p) {
  std::sort(sample.begin(), sample.end());
  return quantile_sorted(sample, p);
}

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1 denominator).
inline double stddev(std::span<const double> v) {
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  return d;
}

/// Asymptotic two-sample KS critical value at level alpha.
inline double ks_critical(std::size_t n1, std::size_t n2, double alpha) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double a = static_cast<double>(n1), b = static_cast<double>(n2);
  return c * std::sqrt((a + b) / (a * b));
}

}  // namespace wfsel
