#pragma once

// Stationary densities and the importance-sampling pool behind every
// expectation under the selected law.
//
// A WeightedPool holds n draws from a (mixture of) symmetric Dirichlet
// proposals together with base log-weights b_i = log f_Neut(x_i | theta) -
// log q(x_i). Selection enters only at query time through the factor
// exp(-x_i' Sigma x_i), so for a fixed pool every derived quantity is a
// smooth deterministic function of sigma.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "wfsel/core.hpp"
#include "wfsel/parallel.hpp"
#include "wfsel/random.hpp"

namespace wfsel {

/// log of the neutral Dirichlet(theta_1..theta_k) density at x.
inline double neutral_log_density(const SimplexPoint& x,
                                  const MutationParams& theta) {
  if (x.k() != theta.k()) {
    throw InvalidInput("data has k = " + std::to_string(x.k()) +
                       " but mutation parameters have k = " +
                       std::to_string(theta.k()));
  }
  double out = std::lgamma(theta.total());
  for (std::size_t i = 0; i < x.k(); ++i) {
    out -= std::lgamma(theta[i]);
    out += (theta[i] - 1.0) * std::log(x[i]);
  }
  return out;
}

/// log density of a symmetric Dirichlet(c, ..., c) given sum_i log x_i.
inline double symmetric_dirichlet_log_density(double c, std::size_t k,
                                              double sum_log_x) {
  const double kd = static_cast<double>(k);
  return std::lgamma(kd * c) - kd * std::lgamma(c) + (c - 1.0) * sum_log_x;
}

/// Reliability diagnostic for a self-normalized importance estimate.
struct EssReport {
  double ess = 0.0;
  std::size_t n = 0;
  double min_weight_fraction = 0.0;
  double max_weight_fraction = 0.0;
  double floor = 200.0;

  bool reliable() const noexcept { return ess >= floor; }
};

struct ProposalComponent {
  double concentration;
  std::size_t count;
};

struct PoolOptions {
  std::size_t n = 100'000;
  std::uint64_t seed = 1;
  /// Symmetric proposal concentration; defaults to the mean theta_i.
  std::optional<double> proposal_a;
  /// Largest |sigma| the pool is expected to serve. Beyond the defensive
  /// threshold the proposal becomes a mixture over several concentrations.
  double sigma_reach = 0.0;
  double defensive_threshold = 200.0;
  /// Range of total theta the pool may be reweighted to (posterior sampling).
  std::optional<std::pair<double, double>> theta_range;
  double ess_floor = 200.0;
  bool retain_draws = true;
  unsigned threads = 0;
};

/// Immutable draw storage shared between pools retargeted to different theta.
struct DrawSet {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<ProposalComponent> components;
  std::vector<double> values;       // n * k row-major; empty if not retained
  std::vector<double> h;            // homozygosity per draw
  std::vector<double> sum_log_x;    // sum_j log x_ij per draw
  std::vector<double> log_proposal; // log q(x_i) under the mixture

  std::size_t size() const noexcept { return h.size(); }
};

class WeightedPool {
 public:
  WeightedPool(std::shared_ptr<const DrawSet> draws, MutationParams theta,
               double ess_floor = 200.0)
      : draws_(std::move(draws)),
        theta_(std::move(theta)),
        ess_floor_(ess_floor) {
    if (theta_.k() != draws_->k) {
      throw InvalidInput("pool dimension does not match mutation parameters");
    }
    base_log_weight_ = compute_base_weights(theta_);
  }

  /// Restores a pool from persisted parts; base weights are taken verbatim.
  WeightedPool(std::shared_ptr<const DrawSet> draws, MutationParams theta,
               std::vector<double> base_log_weights, double ess_floor)
      : draws_(std::move(draws)),
        theta_(std::move(theta)),
        base_log_weight_(std::move(base_log_weights)),
        ess_floor_(ess_floor) {
    if (base_log_weight_.size() != draws_->size()) {
      throw InvalidInput("base weight count does not match draw count");
    }
  }

  std::size_t k() const noexcept { return draws_->k; }
  std::size_t size() const noexcept { return draws_->size(); }
  std::uint64_t seed() const noexcept { return draws_->seed; }
  const MutationParams& target_theta() const noexcept { return theta_; }
  double ess_floor() const noexcept { return ess_floor_; }
  const DrawSet& draw_set() const noexcept { return *draws_; }
  std::shared_ptr<const DrawSet> shared_draws() const noexcept {
    return draws_;
  }
  std::span<const ProposalComponent> components() const noexcept {
    return draws_->components;
  }

  std::span<const double> homozygosities() const noexcept { return draws_->h; }
  std::span<const double> base_log_weights() const noexcept {
    return base_log_weight_;
  }
  bool has_draws() const noexcept { return !draws_->values.empty(); }
  std::span<const double> draw(std::size_t i) const {
    if (!has_draws()) throw InvalidInput("pool does not retain full draws");
    return std::span<const double>(draws_->values).subspan(i * k(), k());
  }

  double min_h() const {
    return *std::min_element(draws_->h.begin(), draws_->h.end());
  }
  double max_h() const {
    return *std::max_element(draws_->h.begin(), draws_->h.end());
  }

  /// Same draws, base weights recomputed for another theta.
  WeightedPool retarget(const MutationParams& theta) const {
    return WeightedPool(draws_, theta, ess_floor_);
  }

  /// Base log-weights the pool would carry for `theta`.
  std::vector<double> compute_base_weights(const MutationParams& theta) const {
    const DrawSet& d = *draws_;
    const std::size_t n = d.size();
    std::vector<double> b(n);
    const double kd = static_cast<double>(d.k);
    if (theta.is_symmetric()) {
      const double alpha = theta.total() / kd;
      if (d.components.size() == 1 && d.components[0].concentration == alpha) {
        std::fill(b.begin(), b.end(), 0.0);
        return b;
      }
      const double c0 = std::lgamma(theta.total()) - kd * std::lgamma(alpha);
      for (std::size_t i = 0; i < n; ++i) {
        b[i] = c0 + (alpha - 1.0) * d.sum_log_x[i] - d.log_proposal[i];
      }
      return b;
    }
    if (d.values.empty()) {
      throw InvalidInput(
          "retargeting to asymmetric mutation rates needs retained draws");
    }
    double c0 = std::lgamma(theta.total());
    for (std::size_t j = 0; j < d.k; ++j) c0 -= std::lgamma(theta[j]);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = c0;
      for (std::size_t j = 0; j < d.k; ++j) {
        acc += (theta[j] - 1.0) * std::log(d.values[i * d.k + j]);
      }
      b[i] = acc - d.log_proposal[i];
    }
    return b;
  }

 private:
  std::shared_ptr<const DrawSet> draws_;
  MutationParams theta_;
  std::vector<double> base_log_weight_;
  double ess_floor_;
};

namespace detail {

inline std::vector<ProposalComponent> plan_components(
    const MutationParams& theta, const PoolOptions& opt) {
  const std::size_t k = theta.k();
  const double kd = static_cast<double>(k);
  const double a = opt.proposal_a.value_or(theta.total() / kd);
  if (!(a > 0.0)) throw InvalidInput("proposal concentration must be positive");

  std::vector<double> extra;
  if (opt.theta_range) {
    auto [lo, hi] = *opt.theta_range;
    if (!(lo > 0.0) || !(hi >= lo)) throw InvalidInput("bad theta range");
    for (double c = lo / kd; c < hi / kd * 2.0; c *= 2.0) extra.push_back(c);
  }
  if (std::abs(opt.sigma_reach) > opt.defensive_threshold) {
    extra.push_back(a / 4.0);
    extra.push_back(2.0);
    extra.push_back(8.0);
    // A symmetric Dirichlet(c) matches the spread of the selected law near
    // the centroid when c is about 2 sigma / k^2.
    const double c_hi = 2.0 * std::abs(opt.sigma_reach) / (kd * kd);
    for (double c = 32.0; c < 2.0 * c_hi; c *= 4.0) extra.push_back(c);
  }
  std::sort(extra.begin(), extra.end());
  extra.erase(std::remove_if(extra.begin(), extra.end(),
                             [a](double c) { return std::abs(c - a) < 1e-12; }),
              extra.end());
  extra.erase(std::unique(extra.begin(), extra.end()), extra.end());

  if (opt.n == 0) throw InvalidInput("pool size must be at least 1");
  if (extra.empty()) return {{a, opt.n}};

  // Half the draws stay on the base proposal, the rest are spread evenly.
  std::vector<ProposalComponent> comps;
  const std::size_t base = std::max<std::size_t>(1, opt.n / 2);
  comps.push_back({a, base});
  const std::size_t rest = opt.n - base;
  for (std::size_t j = 0; j < extra.size(); ++j) {
    const std::size_t share =
        rest / extra.size() + (j < rest % extra.size() ? 1 : 0);
    if (share > 0) comps.push_back({extra[j], share});
  }
  return comps;
}

}  // namespace detail

/// Draws the pool. Deterministic in (seed, n, proposal plan, theta)
/// regardless of the worker count.
inline WeightedPool build_pool(const MutationParams& theta,
                               const PoolOptions& opt) {
  auto set = std::make_shared<DrawSet>();
  const std::size_t k = theta.k();
  set->k = k;
  set->seed = opt.seed;
  set->components = detail::plan_components(theta, opt);

  std::size_t n = 0;
  for (const auto& c : set->components) n += c.count;
  set->h.resize(n);
  set->sum_log_x.resize(n);
  set->log_proposal.resize(n);
  std::vector<double> values(n * k);

  std::vector<std::size_t> offsets;
  {
    std::size_t off = 0;
    for (const auto& c : set->components) {
      offsets.push_back(off);
      off += c.count;
    }
  }
  const auto& comps = set->components;
  const double nd = static_cast<double>(n);

  parallel_for(n, opt.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> alpha(k);
    std::vector<double> mix_terms(comps.size());
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t j =
          static_cast<std::size_t>(std::upper_bound(offsets.begin(),
                                                    offsets.end(), i) -
                                   offsets.begin()) -
          1;
      const std::size_t local = i - offsets[j];
      std::fill(alpha.begin(), alpha.end(), comps[j].concentration);
      std::span<double> x(values.data() + i * k, k);
      dirichlet_draw(derive_seed(opt.seed, id(StreamId::pool), j, local),
                     alpha, x);
      double slx = 0.0;
      for (double v : x) slx += std::log(v);
      set->h[i] = sum_of_squares(x);
      set->sum_log_x[i] = slx;
      if (comps.size() == 1) {
        set->log_proposal[i] =
            symmetric_dirichlet_log_density(comps[0].concentration, k, slx);
      } else {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < comps.size(); ++c) {
          mix_terms[c] = std::log(static_cast<double>(comps[c].count) / nd) +
                         symmetric_dirichlet_log_density(
                             comps[c].concentration, k, slx);
          mx = std::max(mx, mix_terms[c]);
        }
        double s = 0.0;
        for (double t : mix_terms) s += std::exp(t - mx);
        set->log_proposal[i] = mx + std::log(s);
      }
    }
  });
  if (opt.retain_draws) set->values = std::move(values);
  return WeightedPool(std::move(set), theta, opt.ess_floor);
}

/// Single-proposal pool: n Dirichlet(a, ..., a) draws.
inline WeightedPool build_pool(const MutationParams& theta, double proposal_a,
                               std::size_t n, std::uint64_t seed) {
  PoolOptions opt;
  opt.n = n;
  opt.seed = seed;
  opt.proposal_a = proposal_a;
  return build_pool(theta, opt);
}

namespace detail {

// Base log-weights either read from the pool or evaluated on the fly for a
// symmetric theta the pool was not built for.
class BaseWeights {
 public:
  explicit BaseWeights(const WeightedPool& pool)
      : stored_(pool.base_log_weights().data()) {}

  BaseWeights(const WeightedPool& pool, const MutationParams& theta) {
    const auto& target = pool.target_theta();
    if (theta.k() != pool.k()) {
      throw InvalidInput("mutation parameters do not match pool dimension");
    }
    const bool same = theta.is_symmetric() == target.is_symmetric() &&
                      theta.per_allele() == target.per_allele();
    if (same) {
      stored_ = pool.base_log_weights().data();
    } else if (theta.is_symmetric()) {
      const DrawSet& d = pool.draw_set();
      const double kd = static_cast<double>(d.k);
      const double alpha = theta.total() / kd;
      constant_ = std::lgamma(theta.total()) - kd * std::lgamma(alpha);
      slope_ = alpha - 1.0;
      sum_log_x_ = d.sum_log_x.data();
      log_q_ = d.log_proposal.data();
    } else {
      owned_ = pool.compute_base_weights(theta);
      stored_ = owned_.data();
    }
  }

  double operator[](std::size_t i) const noexcept {
    if (stored_) return stored_[i];
    return constant_ + slope_ * sum_log_x_[i] - log_q_[i];
  }

 private:
  const double* stored_ = nullptr;
  const double* sum_log_x_ = nullptr;
  const double* log_q_ = nullptr;
  double constant_ = 0.0;
  double slope_ = 0.0;
  std::vector<double> owned_;
};

// exp(b_i - sigma h_i - shift) summaries in one pass.
struct SymmetricSums {
  double shift = 0.0;
  double w = 0.0;     // sum v
  double wh = 0.0;    // sum v h
  double whh = 0.0;   // sum v h^2
  double ww = 0.0;    // sum v^2
  double w_min = 0.0;
  double w_max = 0.0;
};

inline SymmetricSums symmetric_sums(const WeightedPool& pool,
                                    const BaseWeights& b, double sigma) {
  const auto h = pool.homozygosities();
  const std::size_t n = h.size();
  SymmetricSums s;
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, b[i] - sigma * h[i]);
  s.shift = mx;
  s.w_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::exp(b[i] - sigma * h[i] - mx);
    s.w += v;
    s.wh += v * h[i];
    s.whh += v * h[i] * h[i];
    s.ww += v * v;
    s.w_min = std::min(s.w_min, v);
    s.w_max = std::max(s.w_max, v);
  }
  return s;
}

inline EssReport make_ess(const SymmetricSums& s, std::size_t n,
                          double floor) {
  EssReport r;
  r.n = n;
  r.ess = s.ww > 0.0 ? (s.w * s.w) / s.ww : 0.0;
  r.ess = std::clamp(r.ess, 1.0, static_cast<double>(n));
  r.min_weight_fraction = s.w_min / s.w;
  r.max_weight_fraction = s.w_max / s.w;
  r.floor = floor;
  return r;
}

// Per-draw exponent x_i' Sigma x_i for a general model.
inline std::vector<double> draw_quadratic_forms(const WeightedPool& pool,
                                                const SelectionModel& model) {
  model.check_dimension(pool.k());
  std::vector<double> q(pool.size());
  if (model.is_symmetric()) {
    const auto h = pool.homozygosities();
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = model.sigma() * h[i];
    return q;
  }
  for (std::size_t i = 0; i < q.size(); ++i) {
    q[i] = quadratic_form(pool.draw(i), model);
  }
  return q;
}

}  // namespace detail

/// Estimate of log E_Neut(exp(-X' Sigma X)).
struct NormalizerEstimate {
  double value = 0.0;
  /// Delta-method standard error of `value`.
  double std_error = 0.0;
  EssReport ess;
};

namespace detail {

inline NormalizerEstimate log_normalizer_impl(const WeightedPool& pool,
                                              const BaseWeights& b,
                                              const std::vector<double>* q,
                                              double sigma) {
  const auto h = pool.homozygosities();
  const std::size_t n = pool.size();
  auto expo = [&](std::size_t i) {
    return q ? b[i] - (*q)[i] : b[i] - sigma * h[i];
  };
  double bmax = -std::numeric_limits<double>::infinity();
  double emax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    bmax = std::max(bmax, b[i]);
    emax = std::max(emax, expo(i));
  }
  double su = 0.0, sv = 0.0, svv = 0.0, suu = 0.0, suv = 0.0;
  double vmin = std::numeric_limits<double>::infinity(), vmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double bi = b[i];
    const double u = std::exp(bi - bmax);
    const double v = std::exp(expo(i) - emax);
    su += u;
    sv += v;
    svv += v * v;
    suu += u * u;
    suv += u * v;
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  NormalizerEstimate out;
  // sum_i (v_i - r u_i)^2 with r = sv / su, the ratio-estimator residual.
  const double r = sv / su;
  const double var = std::max(0.0, svv - 2.0 * r * suv + r * r * suu);
  out.value = (emax - bmax) + std::log(sv) - std::log(su);
  out.std_error = std::sqrt(var) / sv;
  SymmetricSums s;
  s.w = sv;
  s.ww = svv;
  s.w_min = vmin;
  s.w_max = vmax;
  out.ess = make_ess(s, n, pool.ess_floor());
  return out;
}

}  // namespace detail

/// Self-normalized importance estimate of log E_Neut(exp(-X' Sigma X)) for
/// the pool's own target theta.
inline NormalizerEstimate log_normalizer(const WeightedPool& pool,
                                         const SelectionModel& model) {
  detail::BaseWeights b(pool);
  if (model.is_symmetric()) {
    if (model.sigma() == 0.0) {
      NormalizerEstimate zero;
      auto s = detail::symmetric_sums(pool, b, 0.0);
      zero.ess = detail::make_ess(s, pool.size(), pool.ess_floor());
      return zero;
    }
    return detail::log_normalizer_impl(pool, b, nullptr, model.sigma());
  }
  const auto q = detail::draw_quadratic_forms(pool, model);
  return detail::log_normalizer_impl(pool, b, &q, 0.0);
}

/// As above but reweighted to `theta` without rebuilding the pool.
inline NormalizerEstimate log_normalizer(const WeightedPool& pool,
                                         const MutationParams& theta,
                                         const SelectionModel& model) {
  detail::BaseWeights b(pool, theta);
  if (model.is_symmetric()) {
    if (model.sigma() == 0.0) {
      NormalizerEstimate zero;
      auto s = detail::symmetric_sums(pool, b, 0.0);
      zero.ess = detail::make_ess(s, pool.size(), pool.ess_floor());
      return zero;
    }
    return detail::log_normalizer_impl(pool, b, nullptr, model.sigma());
  }
  const auto q = detail::draw_quadratic_forms(pool, model);
  return detail::log_normalizer_impl(pool, b, &q, 0.0);
}

inline NormalizerEstimate log_normalizer(const WeightedPool& pool,
                                         double sigma) {
  return log_normalizer(pool, SelectionModel::symmetric(sigma));
}

/// ESS of the selected-law weights at sigma.
inline EssReport ess_at(const WeightedPool& pool, double sigma) {
  detail::BaseWeights b(pool);
  return detail::make_ess(detail::symmetric_sums(pool, b, sigma), pool.size(),
                          pool.ess_floor());
}

/// g(sigma) = E_Sel(H | sigma), the weighted mean of pool homozygosities.
inline double g_sigma(const WeightedPool& pool, double sigma) {
  detail::BaseWeights b(pool);
  const auto s = detail::symmetric_sums(pool, b, sigma);
  return s.wh / s.w;
}

/// Var_Sel(H | sigma) = -g'(sigma).
inline double var_sigma(const WeightedPool& pool, double sigma) {
  detail::BaseWeights b(pool);
  const auto s = detail::symmetric_sums(pool, b, sigma);
  const double m = s.wh / s.w;
  return std::max(0.0, s.whh / s.w - m * m);
}

/// d/dsigma of the log-likelihood: -h + E_Sel(H | sigma).
inline double score_sigma(Homozygosity h, const WeightedPool& pool,
                          double sigma) {
  return -h.value + g_sigma(pool, sigma);
}

/// Matrix of d/dsigma_ij log f_Sel: E_Sel(X_i X_j | Sigma) - x_i x_j.
inline SelectionMatrix score_general(const SimplexPoint& x,
                                     const WeightedPool& pool,
                                     const SelectionModel& model) {
  const std::size_t k = pool.k();
  if (x.k() != k) throw InvalidInput("data dimension does not match pool");
  if (!pool.has_draws()) {
    throw InvalidInput("score_general needs a pool that retains draws");
  }
  const auto q = detail::draw_quadratic_forms(pool, model);
  const auto b = pool.base_log_weights();
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < q.size(); ++i) mx = std::max(mx, b[i] - q[i]);
  std::vector<double> acc(k * k, 0.0);
  double sw = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double v = std::exp(b[i] - q[i] - mx);
    sw += v;
    const auto d = pool.draw(i);
    for (std::size_t r = 0; r < k; ++r) {
      const double vr = v * d[r];
      for (std::size_t c = r; c < k; ++c) acc[r * k + c] += vr * d[c];
    }
  }
  auto out = SelectionMatrix::zero(k);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = r; c < k; ++c) {
      const double val = acc[r * k + c] / sw - x[r] * x[c];
      out(r, c) = val;
      out(c, r) = val;
    }
  }
  return out;
}

/// E_Sel(X) and E_Sel(H) under a general model; the pool must retain draws.
struct SelectedMoments {
  std::vector<double> mean;
  double homozygosity = 0.0;
  EssReport ess;
};

inline SelectedMoments selected_moments(const WeightedPool& pool,
                                        const SelectionModel& model) {
  if (!pool.has_draws()) {
    throw InvalidInput("selected_moments needs a pool that retains draws");
  }
  const std::size_t k = pool.k();
  const auto q = detail::draw_quadratic_forms(pool, model);
  const auto b = pool.base_log_weights();
  const auto hs = pool.homozygosities();
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < q.size(); ++i) mx = std::max(mx, b[i] - q[i]);
  SelectedMoments out;
  out.mean.assign(k, 0.0);
  detail::SymmetricSums s;
  s.w_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double v = std::exp(b[i] - q[i] - mx);
    s.w += v;
    s.ww += v * v;
    s.wh += v * hs[i];
    s.w_min = std::min(s.w_min, v);
    s.w_max = std::max(s.w_max, v);
    const auto d = pool.draw(i);
    for (std::size_t j = 0; j < k; ++j) out.mean[j] += v * d[j];
  }
  for (double& m : out.mean) m /= s.w;
  out.homozygosity = s.wh / s.w;
  out.ess = detail::make_ess(s, pool.size(), pool.ess_floor());
  return out;
}

/// F_H(h | sigma) = P_Sel(H <= h).
inline double cdf_homozygosity(const WeightedPool& pool, double sigma,
                               double h) {
  detail::BaseWeights b(pool);
  const auto hs = pool.homozygosities();
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hs.size(); ++i) {
    mx = std::max(mx, b[i] - sigma * hs[i]);
  }
  double below = 0.0, total = 0.0;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const double v = std::exp(b[i] - sigma * hs[i] - mx);
    total += v;
    if (hs[i] <= h) below += v;
  }
  return below / total;
}

inline double cdf_homozygosity(const WeightedPool& pool, double sigma,
                               Homozygosity h) {
  return cdf_homozygosity(pool, sigma, h.value);
}

/// Log-likelihood value with the reliability of its normalizer estimate.
struct LogLikelihood {
  double value = 0.0;
  NormalizerEstimate normalizer;
};

/// log f_Sel(x | theta, Sigma). The pool is reweighted to theta when it was
/// built for a different one.
inline LogLikelihood log_likelihood(const SimplexPoint& x,
                                    const MutationParams& theta,
                                    const SelectionModel& model,
                                    const WeightedPool& pool) {
  if (x.k() != pool.k()) throw InvalidInput("data dimension does not match pool");
  LogLikelihood out;
  out.normalizer = log_normalizer(pool, theta, model);
  out.value = -quadratic_form(x, model) - out.normalizer.value +
              neutral_log_density(x, theta);
  return out;
}

}  // namespace wfsel
