#pragma once

// The composition x* minimizing x' Sigma x over the closed simplex. At x* the
// selected density is unbounded as a function of Sigma, so it is both the
// strongest possible signal for selection and the place where the MLE blows
// up.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "wfsel/core.hpp"
#include "wfsel/random.hpp"

namespace wfsel {

/// Euclidean projection of v onto {x : x_i >= 0, sum x_i = 1}.
inline std::vector<double> project_to_simplex(std::span<const double> v) {
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cumulative += u[i];
    const double t = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) tau = t;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - tau, 0.0);
  return out;
}

struct CompositionOptions {
  double gradient_tol = 1e-10;
  int max_iter = 10'000;
  int random_starts = 10;
  std::uint64_t seed = 20090901;
};

struct OptimalComposition {
  /// May lie on the boundary, so it is not a SimplexPoint.
  std::vector<double> point;
  double value = 0.0;
  /// True when some x*_i is zero: outside the density's support but still
  /// the limit of maximal signal.
  bool boundary = false;
  int converged_runs = 0;
};

namespace detail {

struct DescentRun {
  std::vector<double> x;
  double value;
  bool converged;
};

inline DescentRun projected_gradient(const SelectionMatrix& m,
                                     std::vector<double> x,
                                     const CompositionOptions& opt) {
  const std::size_t k = m.k();
  auto value = [&](std::span<const double> p) {
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) s += m(i, j) * p[i] * p[j];
    }
    return s;
  };
  auto gradient = [&](std::span<const double> p) {
    std::vector<double> g(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) g[i] += 2.0 * m(i, j) * p[j];
    }
    return g;
  };
  double scale = 0.0;
  for (double e : m.entries()) scale = std::max(scale, std::abs(e));
  double step = scale > 0.0 ? 1.0 / (2.0 * scale * static_cast<double>(k)) : 1.0;

  double fx = value(x);
  std::vector<double> trial(k);
  for (int it = 0; it < opt.max_iter; ++it) {
    const auto g = gradient(x);
    // Projected-gradient residual at unit step measures stationarity.
    for (std::size_t i = 0; i < k; ++i) trial[i] = x[i] - g[i];
    const auto p1 = project_to_simplex(trial);
    double res = 0.0;
    for (std::size_t i = 0; i < k; ++i) res += (p1[i] - x[i]) * (p1[i] - x[i]);
    if (std::sqrt(res) < opt.gradient_tol) return {x, fx, true};

    step *= 2.0;
    for (int halving = 0; halving < 80; ++halving) {
      for (std::size_t i = 0; i < k; ++i) trial[i] = x[i] - step * g[i];
      auto cand = project_to_simplex(trial);
      double lin = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const double d = cand[i] - x[i];
        lin += g[i] * d;
        sq += d * d;
      }
      const double fc = value(cand);
      if (fc <= fx + lin + sq / (2.0 * step)) {
        x = std::move(cand);
        fx = fc;
        break;
      }
      step *= 0.5;
    }
  }
  return {x, fx, false};
}

}  // namespace detail

/// Minimizes x' Sigma x over the simplex with multi-start projected gradient
/// descent: centroid, every vertex, and random interior starts.
inline OptimalComposition optimal_composition(const SelectionModel& model,
                                              std::size_t k,
                                              const CompositionOptions& opt = {}) {
  if (k < 2) throw InvalidInput("k must be at least 2");
  const SelectionMatrix m = model.as_matrix(k);
  if (!m.is_symmetric(1e-12)) throw InvalidInput("selection matrix is not symmetric");

  std::vector<std::vector<double>> starts;
  starts.emplace_back(k, 1.0 / static_cast<double>(k));
  for (std::size_t v = 0; v < k; ++v) {
    std::vector<double> e(k, 0.0);
    e[v] = 1.0;
    starts.push_back(std::move(e));
  }
  for (int r = 0; r < opt.random_starts; ++r) {
    std::vector<double> p(k);
    std::vector<double> ones(k, 1.0);
    dirichlet_draw(derive_seed(opt.seed, id(StreamId::optimizer), r), ones, p);
    starts.push_back(std::move(p));
  }

  OptimalComposition best;
  best.value = std::numeric_limits<double>::infinity();
  for (auto& s : starts) {
    auto run = detail::projected_gradient(m, std::move(s), opt);
    if (run.converged) ++best.converged_runs;
    if (run.value < best.value - 1e-14) {
      best.value = run.value;
      best.point = std::move(run.x);
    }
  }
  best.boundary = std::any_of(best.point.begin(), best.point.end(),
                              [](double v) { return v <= 0.0; });
  return best;
}

}  // namespace wfsel
