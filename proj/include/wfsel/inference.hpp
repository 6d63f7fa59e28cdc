#pragma once

// Estimation of the selection intensity: maximum likelihood with instability
// detection, parametric bootstrap, exact intervals from the monotone CDF of
// homozygosity, and posterior sampling under flat priors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wfsel/core.hpp"
#include "wfsel/density.hpp"
#include "wfsel/numeric.hpp"
#include "wfsel/parallel.hpp"
#include "wfsel/random.hpp"
#include "wfsel/sampler.hpp"

namespace wfsel {

enum class MleStatus { converged, unbounded_above, unbounded_below, outside_pool_range };

inline const char* to_string(MleStatus s) {
  switch (s) {
    case MleStatus::converged: return "converged";
    case MleStatus::unbounded_above: return "unbounded_above";
    case MleStatus::unbounded_below: return "unbounded_below";
    case MleStatus::outside_pool_range: return "outside_pool_range";
  }
  return "unknown";
}

struct MleResult {
  double sigma_hat = 0.0;
  std::optional<double> theta_hat;
  MleStatus status = MleStatus::converged;
  double score_at_solution = 0.0;
  std::pair<double, double> bracket{0.0, 0.0};
  double ess_at_solution = 0.0;
  /// Joint estimation only: the outer optimum sits on a theta bound.
  bool theta_at_bound = false;
  double log_likelihood = std::numeric_limits<double>::quiet_NaN();

  bool converged() const noexcept { return status == MleStatus::converged; }
  /// sigma_hat with instability statuses mapped to +-infinity.
  double extended_value() const noexcept {
    const double inf = std::numeric_limits<double>::infinity();
    switch (status) {
      case MleStatus::converged: return sigma_hat;
      case MleStatus::unbounded_above: return inf;
      case MleStatus::unbounded_below: return -inf;
      case MleStatus::outside_pool_range: return sigma_hat > 0 ? inf : -inf;
    }
    return sigma_hat;
  }
};

enum class IntervalMethod { bootstrap_percentile, monotone_exact, credible };

inline const char* to_string(IntervalMethod m) {
  switch (m) {
    case IntervalMethod::bootstrap_percentile: return "bootstrap_percentile";
    case IntervalMethod::monotone_exact: return "monotone_exact";
    case IntervalMethod::credible: return "credible";
  }
  return "unknown";
}

struct IntervalEstimate {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  IntervalMethod method = IntervalMethod::monotone_exact;
  std::pair<double, double> alpha_split{0.025, 0.025};
  /// An endpoint sits at the search-range bound; widen the range.
  bool lower_at_bound = false;
  bool upper_at_bound = false;

  double width() const noexcept { return upper - lower; }
  bool contains(double v) const noexcept { return lower <= v && v <= upper; }
};

struct MleOptions {
  double sigma_min = -1e4;
  double sigma_max = 1e5;
  /// h within this distance of the pool's extreme homozygosities is treated
  /// as the singular point.
  double margin = 1e-12;
  double score_tol = 1e-8;
  double bracket_tol = 1e-6;
};

/// Solves g(sigma) = h on a fixed pool. g is exactly non-increasing on a
/// fixed pool, so a sign-change bracket always exists when h lies strictly
/// between the pool's extreme homozygosities.
class SigmaSolver {
 public:
  explicit SigmaSolver(const WeightedPool& pool, MleOptions opt = {})
      : pool_(&pool), opt_(opt), h_min_(pool.min_h()), h_max_(pool.max_h()) {}

  /// Tabulates g on a sinh-spaced sigma grid so later solves start from a
  /// tight bracket. Worth it when solving for many h on one pool.
  void tabulate(std::size_t points = 600, double scale = 10.0,
                unsigned threads = 0) {
    const double u_lo = std::asinh(opt_.sigma_min / scale);
    const double u_hi = std::asinh(opt_.sigma_max / scale);
    grid_.resize(points);
    g_grid_.resize(points);
    for (std::size_t i = 0; i < points; ++i) {
      const double u =
          u_lo + (u_hi - u_lo) * static_cast<double>(i) /
                     static_cast<double>(points - 1);
      grid_[i] = scale * std::sinh(u);
    }
    grid_.front() = opt_.sigma_min;
    grid_.back() = opt_.sigma_max;
    parallel_for(points, threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) g_grid_[i] = g_sigma(*pool_, grid_[i]);
    });
  }

  MleResult solve(double h) const {
    MleResult r;
    const double inf = std::numeric_limits<double>::infinity();
    if (h <= h_min_ + opt_.margin) {
      r.status = MleStatus::unbounded_above;
      r.sigma_hat = inf;
      r.bracket = {opt_.sigma_max, inf};
      return r;
    }
    if (h >= h_max_ - opt_.margin) {
      r.status = MleStatus::unbounded_below;
      r.sigma_hat = -inf;
      r.bracket = {-inf, opt_.sigma_min};
      return r;
    }
    auto f = [&](double s) { return g_sigma(*pool_, s) - h; };

    double lo, hi, f_lo, f_hi;
    if (!grid_.empty()) {
      // g_grid_ is non-increasing; find the first grid point with g <= h.
      auto it = std::find_if(g_grid_.begin(), g_grid_.end(),
                             [h](double g) { return g <= h; });
      if (it == g_grid_.end()) return outside(opt_.sigma_max, g_grid_.back() - h);
      if (it == g_grid_.begin()) {
        if (*it == h) return exact(grid_.front());
        return outside(opt_.sigma_min, g_grid_.front() - h);
      }
      const std::size_t i = static_cast<std::size_t>(it - g_grid_.begin());
      lo = grid_[i - 1];
      hi = grid_[i];
      f_lo = g_grid_[i - 1] - h;
      f_hi = g_grid_[i] - h;
    } else {
      const double f0 = f(0.0);
      if (f0 == 0.0) return exact(0.0);
      // Expand away from zero in the direction of the root.
      double step = 10.0;
      lo = hi = 0.0;
      f_lo = f_hi = f0;
      if (f0 > 0.0) {
        while (true) {
          const double next = std::min(hi + step, opt_.sigma_max);
          const double fn = f(next);
          lo = hi;
          f_lo = f_hi;
          hi = next;
          f_hi = fn;
          if (fn <= 0.0) break;
          if (next >= opt_.sigma_max) return outside(opt_.sigma_max, fn);
          step *= 2.0;
        }
      } else {
        while (true) {
          const double next = std::max(lo - step, opt_.sigma_min);
          const double fn = f(next);
          hi = lo;
          f_hi = f_lo;
          lo = next;
          f_lo = fn;
          if (fn >= 0.0) break;
          if (next <= opt_.sigma_min) return outside(opt_.sigma_min, fn);
          step *= 2.0;
        }
      }
    }
    RootOptions ro;
    ro.f_tol = opt_.score_tol;
    ro.x_tol = opt_.bracket_tol;
    const auto root = bracketed_root(f, lo, hi, f_lo, f_hi, ro);
    r.status = MleStatus::converged;
    r.sigma_hat = root.root;
    r.score_at_solution = root.f_root;
    r.bracket = {root.lo, root.hi};
    r.ess_at_solution = ess_at(*pool_, r.sigma_hat).ess;
    return r;
  }

  const MleOptions& options() const noexcept { return opt_; }

 private:
  MleResult outside(double bound, double score) const {
    MleResult r;
    r.status = MleStatus::outside_pool_range;
    r.sigma_hat = bound;
    r.score_at_solution = score;
    r.bracket = {bound, bound};
    r.ess_at_solution = ess_at(*pool_, bound).ess;
    return r;
  }
  MleResult exact(double s) const {
    MleResult r;
    r.sigma_hat = s;
    r.bracket = {s, s};
    r.ess_at_solution = ess_at(*pool_, s).ess;
    return r;
  }

  const WeightedPool* pool_;
  MleOptions opt_;
  double h_min_, h_max_;
  std::vector<double> grid_, g_grid_;
};

/// MLE of sigma for known theta (the pool's target): the root of
/// -h + E_Sel(H | sigma).
inline MleResult mle_sigma(Homozygosity h, const WeightedPool& pool,
                           const MleOptions& opt = {}) {
  if (h.k != pool.k()) throw InvalidInput("data dimension does not match pool");
  return SigmaSolver(pool, opt).solve(h.value);
}

inline MleResult mle_sigma(double h, const WeightedPool& pool,
                           const MleOptions& opt = {}) {
  return SigmaSolver(pool, opt).solve(h);
}

struct JointConfig {
  double theta_lo = 0.1;
  double theta_hi = 50.0;
  double theta_tol = 1e-3;
  std::size_t pool_size = 100'000;
  double sigma_reach = 0.0;
  MleOptions mle;
  unsigned threads = 0;
};

/// Joint (theta, sigma) MLE: golden-section search over the profile
/// likelihood in theta, each profile point solving for sigma on a pool
/// rebuilt from the same seed (common random numbers).
inline MleResult mle_joint(const SimplexPoint& x, std::uint64_t seed,
                           const JointConfig& cfg = {}) {
  const std::size_t k = x.k();
  const double h = homozygosity(x).value;
  std::optional<MleResult> unstable;

  auto profile = [&](double theta) -> std::pair<double, MleResult> {
    const auto mp = MutationParams::symmetric(theta, k);
    PoolOptions po;
    po.n = cfg.pool_size;
    po.seed = seed;
    po.sigma_reach = cfg.sigma_reach;
    po.retain_draws = false;
    po.threads = cfg.threads;
    const auto pool = build_pool(mp, po);
    auto r = mle_sigma(h, pool, cfg.mle);
    r.theta_hat = theta;
    if (!r.converged()) return {std::numeric_limits<double>::infinity(), r};
    r.log_likelihood =
        log_likelihood(x, mp, SelectionModel::symmetric(r.sigma_hat), pool).value;
    return {r.log_likelihood, r};
  };

  auto objective = [&](double theta) {
    if (unstable) return std::numeric_limits<double>::infinity();
    auto [v, r] = profile(theta);
    if (!r.converged()) unstable = r;
    return v;
  };
  const auto best =
      golden_section_max(objective, cfg.theta_lo, cfg.theta_hi, cfg.theta_tol);
  if (unstable) return *unstable;
  auto [v, r] = profile(best.x);
  const double span = cfg.theta_hi - cfg.theta_lo;
  r.theta_at_bound = best.x - cfg.theta_lo < 10.0 * cfg.theta_tol ||
                     cfg.theta_hi - best.x < 10.0 * cfg.theta_tol ||
                     span <= 0.0;
  return r;
}

struct BootstrapConfig {
  std::size_t pool_size = 100'000;
  /// Pool reach for the heavy right tail of sigma-hat.
  double sigma_reach = 2000.0;
  double level = 0.95;
  /// Re-estimate theta in every replicate instead of conditioning on it.
  bool joint = false;
  JointConfig joint_config;
  SamplerConfig sampler;
  MleOptions mle;
  unsigned threads = 0;
};

struct BootstrapResult {
  std::vector<MleResult> estimates;
  /// Homozygosity of each simulated dataset.
  std::vector<double> data_h;
  double standard_error = 0.0;
  IntervalEstimate percentile_interval;
  std::size_t n_unbounded = 0;
  /// More than 20% of replicates unbounded: the standard error is not
  /// meaningful under such a heavy tail.
  bool heavy_tail = false;
  double theta = 0.0;
  double sigma = 0.0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  SamplerReport sampler;
};

/// Summarizes replicate estimates: SE over converged ones, percentile
/// interval with unbounded replicates at +-infinity.
inline void summarize_replicates(BootstrapResult& out, double level) {
  std::vector<double> converged, extended;
  for (const auto& e : out.estimates) {
    extended.push_back(e.extended_value());
    if (e.converged()) {
      converged.push_back(e.sigma_hat);
    } else {
      ++out.n_unbounded;
    }
  }
  out.standard_error = stddev(converged);
  const double a = (1.0 - level) / 2.0;
  std::sort(extended.begin(), extended.end());
  out.percentile_interval.method = IntervalMethod::bootstrap_percentile;
  out.percentile_interval.level = level;
  out.percentile_interval.alpha_split = {a, a};
  out.percentile_interval.lower = quantile_sorted(extended, a);
  out.percentile_interval.upper = quantile_sorted(extended, 1.0 - a);
  out.heavy_tail = static_cast<double>(out.n_unbounded) >
                   0.2 * static_cast<double>(out.estimates.size());
}

/// Parametric bootstrap of sigma-hat at (theta, sigma, k), conditioning on
/// theta inside each replicate unless cfg.joint is set.
inline BootstrapResult bootstrap(double theta, double sigma, std::size_t k,
                                 std::size_t m, std::uint64_t seed,
                                 const BootstrapConfig& cfg = {}) {
  if (m < 100) throw InvalidInput("bootstrap needs at least 100 replicates");
  const auto mp = MutationParams::symmetric(theta, k);
  BootstrapResult out;
  out.theta = theta;
  out.sigma = sigma;
  out.k = k;
  out.seed = seed;

  auto scfg = cfg.sampler;
  scfg.threads = cfg.threads;
  auto sample = sample_selection(
      mp, sigma, m, derive_seed(seed, id(StreamId::bootstrap), 1), scfg);
  out.sampler = sample.report;
  out.estimates.resize(m);
  out.data_h.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    out.data_h[i] = homozygosity(sample.draws[i]).value;
  }

  if (cfg.joint) {
    auto jc = cfg.joint_config;
    jc.threads = 1;
    parallel_for(m, cfg.threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        out.estimates[i] = mle_joint(
            sample.draws[i], derive_seed(seed, id(StreamId::bootstrap), 2), jc);
      }
    });
  } else {
    PoolOptions po;
    po.n = cfg.pool_size;
    po.seed = derive_seed(seed, id(StreamId::bootstrap), 2);
    po.sigma_reach = cfg.sigma_reach;
    po.retain_draws = false;
    po.threads = cfg.threads;
    const auto pool = build_pool(mp, po);
    SigmaSolver solver(pool, cfg.mle);
    solver.tabulate(600, 10.0, cfg.threads);
    parallel_for(m, cfg.threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        out.estimates[i] = solver.solve(out.data_h[i]);
        out.estimates[i].theta_hat = theta;
      }
    });
  }
  summarize_replicates(out, cfg.level);
  return out;
}

struct MonotoneCiOptions {
  double sigma_lo = -500.0;
  double sigma_hi = 2000.0;
  double f_tol = 1e-10;
  double x_tol = 1e-6;
};

/// Exact (1 - alpha1 - alpha2) interval from F_H(h | sigma_L) = alpha1 and
/// F_H(h | sigma_U) = 1 - alpha2, valid because F_H(h | sigma) is
/// non-decreasing in sigma for fixed h and known theta.
inline IntervalEstimate monotone_ci(Homozygosity h, const WeightedPool& pool,
                                    double alpha1, double alpha2,
                                    const MonotoneCiOptions& opt = {}) {
  if (!(alpha1 >= 0.0 && alpha2 >= 0.0 && alpha1 + alpha2 > 0.0 &&
        alpha1 + alpha2 < 1.0)) {
    throw InvalidInput("need 0 < alpha1 + alpha2 < 1");
  }
  if (h.k != pool.k()) throw InvalidInput("data dimension does not match pool");
  const double f_lo = cdf_homozygosity(pool, opt.sigma_lo, h.value);
  const double f_hi = cdf_homozygosity(pool, opt.sigma_hi, h.value);
  RootOptions ro;
  ro.f_tol = opt.f_tol;
  ro.x_tol = opt.x_tol;

  auto solve = [&](double target, bool& at_bound) {
    if (f_lo >= target) {
      at_bound = f_lo > target;
      return opt.sigma_lo;
    }
    if (f_hi <= target) {
      at_bound = f_hi < target;
      return opt.sigma_hi;
    }
    auto f = [&](double s) { return cdf_homozygosity(pool, s, h.value) - target; };
    return bracketed_root(f, opt.sigma_lo, opt.sigma_hi, f_lo - target,
                          f_hi - target, ro)
        .root;
  };
  IntervalEstimate out;
  out.method = IntervalMethod::monotone_exact;
  out.alpha_split = {alpha1, alpha2};
  out.level = 1.0 - alpha1 - alpha2;
  out.lower = solve(alpha1, out.lower_at_bound);
  out.upper = solve(1.0 - alpha2, out.upper_at_bound);
  if (alpha1 == 1.0 - alpha2) out.upper = out.lower;
  return out;
}

struct PriorBounds {
  double theta_lo = 0.0;  // exclusive
  double theta_hi = 50.0;
  double sigma_lo = -100.0;
  double sigma_hi = 1000.0;

  bool contains(double theta, double sigma) const noexcept {
    return theta > theta_lo && theta <= theta_hi && sigma >= sigma_lo &&
           sigma <= sigma_hi;
  }
};

struct PosteriorConfig {
  /// Hold theta fixed and sample sigma alone.
  std::optional<double> fixed_theta;
  std::size_t burn_in = 2000;
  std::size_t pool_size = 50'000;
  /// Sigma proposal scale as a multiple of the pilot standard error.
  double proposal_scale = 2.0;
  double low_acceptance = 0.02;
  bool keep_trace = false;
  unsigned threads = 0;
};

struct ProposalSpec {
  double theta_lo = 0.0;
  double theta_hi = 0.0;
  double sigma_center = 0.0;
  double sigma_scale = 0.0;
  double pilot_theta = 0.0;
};

struct ChainStep {
  double theta;
  double sigma;
  double log_posterior;
  bool accepted;
};

struct PosteriorChain {
  std::vector<std::pair<double, double>> draws;  // (theta, sigma)
  std::vector<double> log_posterior;
  double acceptance_rate = 0.0;
  bool mistuned = false;
  PriorBounds prior;
  ProposalSpec proposal;
  std::size_t burn_in = 0;
  std::uint64_t seed = 0;
  bool theta_fixed = false;
  /// Every iteration including burn-in, when requested.
  std::vector<ChainStep> trace;

  // Needed to locate the posterior mode.
  std::shared_ptr<const WeightedPool> pool;
  std::optional<SimplexPoint> data;

  std::vector<double> sigmas() const {
    std::vector<double> s;
    s.reserve(draws.size());
    for (const auto& d : draws) s.push_back(d.second);
    return s;
  }
  std::vector<double> thetas() const {
    std::vector<double> t;
    t.reserve(draws.size());
    for (const auto& d : draws) t.push_back(d.first);
    return t;
  }
};

namespace detail {

// Pool that can be reweighted to any theta inside the prior box and serves
// sigma across the prior's range.
inline std::shared_ptr<const WeightedPool> posterior_pool(
    std::size_t k, const PriorBounds& prior, const PosteriorConfig& cfg,
    std::uint64_t seed) {
  PoolOptions po;
  po.n = cfg.pool_size;
  po.seed = derive_seed(seed, id(StreamId::posterior), 1);
  po.sigma_reach = std::max(std::abs(prior.sigma_lo), std::abs(prior.sigma_hi));
  po.retain_draws = false;
  po.threads = cfg.threads;
  double ref_theta;
  if (cfg.fixed_theta) {
    ref_theta = *cfg.fixed_theta;
  } else {
    const double lo = std::max(prior.theta_lo, 0.1);
    po.theta_range = std::make_pair(lo, prior.theta_hi);
    ref_theta = std::sqrt(lo * prior.theta_hi);
  }
  return std::make_shared<const WeightedPool>(
      build_pool(MutationParams::symmetric(ref_theta, k), po));
}

inline double log_posterior(const SimplexPoint& x, const WeightedPool& pool,
                            const PriorBounds& prior, double theta,
                            double sigma) {
  if (!prior.contains(theta, sigma)) return -std::numeric_limits<double>::infinity();
  return log_likelihood(x, MutationParams::symmetric(theta, x.k()),
                        SelectionModel::symmetric(sigma), pool)
      .value;
}

// Profile mode: sigma-hat(theta) on the reweighted pool, clamped to the box.
inline std::pair<double, double> sigma_mode_at(const SimplexPoint& x,
                                               const WeightedPool& pool,
                                               const PriorBounds& prior,
                                               double theta) {
  const auto tp = pool.retarget(MutationParams::symmetric(theta, x.k()));
  MleOptions mo;
  mo.sigma_min = prior.sigma_lo;
  mo.sigma_max = prior.sigma_hi;
  const auto r = mle_sigma(homozygosity(x), tp, mo);
  double s = r.sigma_hat;
  if (!r.converged()) s = r.extended_value() > 0 ? prior.sigma_hi : prior.sigma_lo;
  s = std::clamp(s, prior.sigma_lo, prior.sigma_hi);
  return {s, log_posterior(x, pool, prior, theta, s)};
}

inline std::pair<double, double> posterior_mode(const SimplexPoint& x,
                                                const WeightedPool& pool,
                                                const PriorBounds& prior,
                                                std::optional<double> fixed) {
  if (fixed) return {*fixed, sigma_mode_at(x, pool, prior, *fixed).first};
  const double lo = std::max(prior.theta_lo, 0.1);
  const auto best = golden_section_max(
      [&](double t) { return sigma_mode_at(x, pool, prior, t).second; }, lo,
      prior.theta_hi, 1e-3);
  return {best.x, sigma_mode_at(x, pool, prior, best.x).first};
}

}  // namespace detail

/// Independence Metropolis-Hastings over (theta, sigma), or over sigma alone
/// when cfg.fixed_theta is set. Flat priors on the box make the posterior
/// proportional to the likelihood. The theta proposal is uniform on the box;
/// the sigma proposal is a Laplace density centered at a pilot MLE and
/// truncated to the box.
inline PosteriorChain posterior_sample(const SimplexPoint& x,
                                       const PriorBounds& prior,
                                       std::size_t chain_length,
                                       std::uint64_t seed,
                                       const PosteriorConfig& cfg = {}) {
  if (!(prior.theta_hi > prior.theta_lo) || !(prior.sigma_hi > prior.sigma_lo) ||
      !std::isfinite(prior.theta_hi) || !std::isfinite(prior.sigma_lo) ||
      !std::isfinite(prior.sigma_hi) || prior.theta_lo < 0.0) {
    throw InvalidInput("prior bounds must be finite, ordered, with theta >= 0");
  }
  if (cfg.fixed_theta && !(*cfg.fixed_theta > prior.theta_lo &&
                           *cfg.fixed_theta <= prior.theta_hi)) {
    throw InvalidInput("fixed theta lies outside the prior bounds");
  }
  if (chain_length == 0) throw InvalidInput("chain length must be positive");

  PosteriorChain chain;
  chain.prior = prior;
  chain.burn_in = cfg.burn_in;
  chain.seed = seed;
  chain.theta_fixed = cfg.fixed_theta.has_value();
  chain.data = x;
  chain.pool = detail::posterior_pool(x.k(), prior, cfg, seed);
  const WeightedPool& pool = *chain.pool;

  // Pilot: profile mode and the observed information for sigma there.
  const auto [pilot_theta, pilot_sigma] =
      detail::posterior_mode(x, pool, prior, cfg.fixed_theta);
  const auto tp = pool.retarget(MutationParams::symmetric(pilot_theta, x.k()));
  const double info = var_sigma(tp, pilot_sigma);
  double se = info > 0.0 ? 1.0 / std::sqrt(info) : 0.0;
  if (!(se > 0.0) || !std::isfinite(se)) se = 0.1 * (prior.sigma_hi - prior.sigma_lo);
  se = std::min(se, prior.sigma_hi - prior.sigma_lo);

  ProposalSpec& ps = chain.proposal;
  ps.theta_lo = prior.theta_lo;
  ps.theta_hi = prior.theta_hi;
  ps.sigma_center = pilot_sigma;
  ps.sigma_scale = cfg.proposal_scale * se;
  ps.pilot_theta = pilot_theta;

  Stream rng(seed, id(StreamId::posterior), 2);
  auto propose_sigma = [&] {
    while (true) {
      const double u = rng.uniform() - 0.5;
      const double s = ps.sigma_center -
                       ps.sigma_scale * std::copysign(1.0, u) *
                           std::log(1.0 - 2.0 * std::abs(u));
      if (s >= prior.sigma_lo && s <= prior.sigma_hi) return s;
    }
  };
  auto log_q_sigma = [&](double s) {
    return -std::abs(s - ps.sigma_center) / ps.sigma_scale;
  };
  auto propose_theta = [&] {
    if (cfg.fixed_theta) return *cfg.fixed_theta;
    return prior.theta_lo + (prior.theta_hi - prior.theta_lo) * rng.uniform();
  };

  double cur_t = pilot_theta, cur_s = pilot_sigma;
  double cur_lp = detail::log_posterior(x, pool, prior, cur_t, cur_s);
  const std::size_t total = cfg.burn_in + chain_length;
  chain.draws.reserve(chain_length);
  chain.log_posterior.reserve(chain_length);
  std::size_t accepted = 0;
  for (std::size_t it = 0; it < total; ++it) {
    const double t = propose_theta();
    const double s = propose_sigma();
    const double lp = detail::log_posterior(x, pool, prior, t, s);
    const double log_ratio = lp - cur_lp + log_q_sigma(cur_s) - log_q_sigma(s);
    const bool accept = std::isfinite(lp) && std::log(rng.uniform()) < log_ratio;
    if (accept) {
      cur_t = t;
      cur_s = s;
      cur_lp = lp;
    }
    if (cfg.keep_trace) chain.trace.push_back({cur_t, cur_s, cur_lp, accept});
    if (it >= cfg.burn_in) {
      accepted += accept;
      chain.draws.emplace_back(cur_t, cur_s);
      chain.log_posterior.push_back(cur_lp);
    }
  }
  chain.acceptance_rate =
      static_cast<double>(accepted) / static_cast<double>(chain_length);
  chain.mistuned = chain.acceptance_rate < cfg.low_acceptance;
  return chain;
}

struct PosteriorSummary {
  IntervalEstimate interval;
  double mode_theta = 0.0;
  double mode_sigma = 0.0;
  double mean_sigma = 0.0;
  double median_sigma = 0.0;
};

/// Equal-tailed credible interval for sigma and the posterior mode found by
/// maximizing the log-posterior surface (profile over theta).
inline PosteriorSummary posterior_summary(const PosteriorChain& chain,
                                          double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidInput("level must be in (0, 1)");
  if (chain.draws.size() < 1000) {
    throw InvalidInput("posterior summary needs at least 1000 retained draws");
  }
  PosteriorSummary out;
  auto s = chain.sigmas();
  std::sort(s.begin(), s.end());
  const double a = (1.0 - level) / 2.0;
  out.interval.method = IntervalMethod::credible;
  out.interval.level = level;
  out.interval.alpha_split = {a, a};
  out.interval.lower = quantile_sorted(s, a);
  out.interval.upper = quantile_sorted(s, 1.0 - a);
  out.mean_sigma = mean(s);
  out.median_sigma = quantile_sorted(s, 0.5);
  if (chain.pool && chain.data) {
    std::optional<double> fixed;
    if (chain.theta_fixed) fixed.emplace(chain.draws.front().first);
    std::tie(out.mode_theta, out.mode_sigma) =
        detail::posterior_mode(*chain.data, *chain.pool, chain.prior, fixed);
  }
  return out;
}

}  // namespace wfsel
