#pragma once

// Draws from the neutral Dirichlet law and from the selected stationary law.
//
// Symmetric selection with |sigma| <= sigma_switch uses exact rejection from
// the neutral proposal. The envelope exp(-sigma (h - h_opt)) is tight because
// h >= 1/k always (h_opt = 1/k for sigma >= 0) and h <= 1 always (h_opt = 1
// for sigma < 0). Beyond the switch an independence Metropolis-Hastings chain
// with a moment-matched Dirichlet proposal takes over.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wfsel/composition.hpp"
#include "wfsel/core.hpp"
#include "wfsel/density.hpp"
#include "wfsel/parallel.hpp"
#include "wfsel/random.hpp"

namespace wfsel {

/// Raised when rejection sampling cannot make progress.
class SamplerFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SamplerMethod { rejection, independence_mh };

inline const char* to_string(SamplerMethod m) {
  return m == SamplerMethod::rejection ? "rejection" : "independence-mh";
}

struct SamplerReport {
  SamplerMethod method = SamplerMethod::rejection;
  std::size_t n_requested = 0;
  std::size_t n_proposals = 0;
  double acceptance_rate = 1.0;
  std::uint64_t seed = 0;
  // MH only.
  double proposal_concentration = 0.0;
  std::size_t burn_in = 0;
  std::size_t thinning = 1;
  bool low_acceptance = false;
};

struct SamplerConfig {
  double sigma_switch = 50.0;
  std::size_t burn_in = 1000;
  std::size_t max_thinning = 100;
  double mh_low_acceptance = 0.05;
  /// Rejection gives up once this many proposals yield an acceptance rate
  /// below min_acceptance.
  std::size_t rejection_budget = 10'000'000;
  double min_acceptance = 1e-6;
  /// Rejection is used only when a neutral pilot predicts an acceptance rate
  /// of at least this much; otherwise MH takes over even for |sigma| below
  /// sigma_switch.
  double rejection_floor = 1e-3;
  std::size_t pilot_size = 4000;
  /// Pool used to tune the MH proposal.
  std::size_t tuning_pool_size = 100'000;
  /// Mixture weight of the neutral Dirichlet in the MH proposal. Keeps the
  /// target/proposal ratio bounded near the simplex faces for sigma >= 0.
  double mh_defensive_weight = 0.2;
  unsigned threads = 0;
};

struct SelectionSample {
  std::vector<SimplexPoint> draws;
  SamplerReport report;
};

namespace detail {

inline SimplexPoint make_point(std::span<const double> x) {
  return SimplexPoint(std::vector<double>(x.begin(), x.end()),
                      kInternalSumTolerance);
}

inline double sum_log(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += std::log(v);
  return s;
}

}  // namespace detail

/// n i.i.d. Dirichlet(theta_1, ..., theta_k) draws.
inline std::vector<SimplexPoint> sample_neutral(const MutationParams& theta,
                                                std::size_t n,
                                                std::uint64_t seed,
                                                unsigned threads = 0) {
  if (n == 0) throw InvalidInput("sample size must be at least 1");
  const std::size_t k = theta.k();
  const auto alpha = theta.per_allele();
  std::vector<std::vector<double>> raw(n);
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      raw[i].resize(k);
      dirichlet_draw(derive_seed(seed, id(StreamId::neutral), i), alpha,
                     raw[i]);
    }
  });
  std::vector<SimplexPoint> out;
  out.reserve(n);
  for (auto& r : raw) out.emplace_back(std::move(r));
  return out;
}

namespace detail {

inline SelectionSample rejection_sample(const MutationParams& theta,
                                        double sigma, std::size_t n,
                                        std::uint64_t seed,
                                        const SamplerConfig& cfg) {
  const std::size_t k = theta.k();
  const auto alpha = theta.per_allele();
  const double h_opt = sigma >= 0.0 ? 1.0 / static_cast<double>(k) : 1.0;
  std::vector<std::vector<double>> raw(n);
  std::vector<std::size_t> tries(n, 0);
  std::atomic<std::size_t> total_proposals{0};
  std::atomic<std::size_t> total_accepted{0};
  std::atomic<bool> abort{false};

  parallel_for(n, cfg.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> x(k);
    for (std::size_t i = begin; i < end && !abort.load(); ++i) {
      for (std::size_t j = 0;; ++j) {
        const std::uint64_t s =
            derive_seed(seed, id(StreamId::rejection), i, j);
        dirichlet_draw(s, alpha, x);
        const double h = sum_of_squares(x);
        Stream u(s, 0xacc);
        const std::size_t seen = total_proposals.fetch_add(1) + 1;
        if (std::log(u.uniform()) < -sigma * (h - h_opt)) {
          raw[i] = x;
          tries[i] = j + 1;
          total_accepted.fetch_add(1);
          break;
        }
        if ((seen & 0xffff) == 0 && seen >= cfg.rejection_budget &&
            static_cast<double>(total_accepted.load()) <
                cfg.min_acceptance * static_cast<double>(seen)) {
          abort.store(true);
        }
        if (abort.load()) return;
      }
    }
  });
  if (abort.load()) {
    throw SamplerFailure(
        "rejection sampler acceptance rate fell below " +
        detail::fmt_double(cfg.min_acceptance) + " after " +
        std::to_string(total_proposals.load()) +
        " proposals; lower sigma_switch to use the MCMC sampler");
  }
  SelectionSample out;
  out.draws.reserve(n);
  std::size_t proposals = 0;
  for (std::size_t i = 0; i < n; ++i) {
    proposals += tries[i];
    out.draws.emplace_back(std::move(raw[i]));
  }
  out.report.method = SamplerMethod::rejection;
  out.report.n_requested = n;
  out.report.n_proposals = proposals;
  out.report.acceptance_rate =
      static_cast<double>(n) / static_cast<double>(proposals);
  out.report.seed = seed;
  return out;
}

struct MhComponent {
  double weight;
  std::vector<double> alpha;
};

// Independence MH targeting exp(-x' Sigma x) f_Neut(x | theta) with a
// proposal mixing Dirichlet components.
inline SelectionSample independence_mh(const MutationParams& theta,
                                       const SelectionModel& model,
                                       std::vector<MhComponent> components,
                                       std::size_t n, std::uint64_t seed,
                                       const SamplerConfig& cfg) {
  const std::size_t k = theta.k();
  const auto target_alpha = theta.per_allele();
  double total_weight = 0.0;
  for (const auto& c : components) total_weight += c.weight;
  std::vector<double> log_w;
  for (const auto& c : components) log_w.push_back(std::log(c.weight / total_weight));
  auto log_const = [k](std::span<const double> alpha) {
    double total = 0.0, out = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      total += alpha[j];
      out -= std::lgamma(alpha[j]);
    }
    return out + std::lgamma(total);
  };
  for (std::size_t c = 0; c < components.size(); ++c) {
    log_w[c] += log_const(components[c].alpha);
  }
  std::vector<double> log_x(k);
  auto kernel = [&](std::span<const double> alpha) {
    double lp = 0.0;
    for (std::size_t j = 0; j < k; ++j) lp += (alpha[j] - 1.0) * log_x[j];
    return lp;
  };
  const double target_const = log_const(target_alpha);
  // Both densities below read log_x, which log_ratio fills first.
  auto log_target = [&](std::span<const double> x) {
    return -quadratic_form(x, model) + target_const + kernel(target_alpha);
  };
  std::vector<double> terms(components.size());
  auto log_proposal = [&]() {
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < components.size(); ++c) {
      terms[c] = log_w[c] + kernel(components[c].alpha);
      hi = std::max(hi, terms[c]);
    }
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - hi);
    return hi + std::log(acc);
  };
  auto log_ratio = [&](std::span<const double> x) {
    for (std::size_t j = 0; j < k; ++j) log_x[j] = std::log(x[j]);
    return log_target(x) - log_proposal();
  };
  auto draw = [&](std::uint64_t s, std::vector<double>& x) {
    Stream pick(s, 0xc0c);
    double u = pick.uniform() * total_weight;
    std::size_t c = 0;
    while (c + 1 < components.size() && u >= components[c].weight) {
      u -= components[c].weight;
      ++c;
    }
    dirichlet_draw(s, components[c].alpha, x);
  };

  std::uint64_t step = 0;
  std::vector<double> cur(k), prop(k);
  draw(derive_seed(seed, id(StreamId::mh), step++), cur);
  double cur_ratio = log_ratio(cur);

  auto advance = [&]() {
    const std::uint64_t s = derive_seed(seed, id(StreamId::mh), step++);
    draw(s, prop);
    const double prop_ratio = log_ratio(prop);
    Stream u(s, 0xacc);
    if (std::log(u.uniform()) < prop_ratio - cur_ratio) {
      std::swap(cur, prop);
      cur_ratio = prop_ratio;
      return true;
    }
    return false;
  };

  std::size_t burn_accept = 0;
  for (std::size_t i = 0; i < cfg.burn_in; ++i) burn_accept += advance();
  const double burn_rate =
      cfg.burn_in > 0 ? static_cast<double>(burn_accept) /
                            static_cast<double>(cfg.burn_in)
                      : 1.0;
  std::size_t thin = static_cast<std::size_t>(
      std::ceil(5.0 / std::max(burn_rate, 1e-12)));
  thin = std::clamp<std::size_t>(thin, 1, cfg.max_thinning);

  SelectionSample out;
  out.draws.reserve(n);
  std::size_t accepted = 0, proposals = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < thin; ++t) {
      accepted += advance();
      ++proposals;
    }
    out.draws.push_back(make_point(cur));
  }
  out.report.method = SamplerMethod::independence_mh;
  out.report.n_requested = n;
  out.report.n_proposals = proposals;
  out.report.acceptance_rate =
      static_cast<double>(accepted) / static_cast<double>(proposals);
  out.report.seed = seed;
  out.report.burn_in = cfg.burn_in;
  out.report.thinning = thin;
  out.report.low_acceptance =
      out.report.acceptance_rate < cfg.mh_low_acceptance;
  return out;
}

// Concentration c of Dirichlet(c m) whose mean homozygosity equals target:
// E H = (c sum m_i^2 + 1) / (c + 1).
inline double matched_concentration(double target_h, double sum_m2) {
  const double denom = target_h - sum_m2;
  if (!(denom > 1e-12)) return 1e6;
  return std::clamp((1.0 - target_h) / denom, 1e-3, 1e6);
}

// Neutral Monte Carlo estimate of the rejection acceptance rate
// E_Neut[exp(-sigma (H - h_opt))].
inline double predicted_acceptance(const MutationParams& theta, double sigma,
                                   std::uint64_t seed, std::size_t n) {
  const std::size_t k = theta.k();
  const auto alpha = theta.per_allele();
  const double h_opt = sigma >= 0.0 ? 1.0 / static_cast<double>(k) : 1.0;
  std::vector<double> x(k);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dirichlet_draw(derive_seed(seed, id(StreamId::rejection), 0xb11e, i), alpha,
                   x);
    acc += std::exp(-sigma * (sum_of_squares(x) - h_opt));
  }
  return acc / static_cast<double>(std::max<std::size_t>(n, 1));
}

// Matched Dirichlet rescaled by 1/4 .. 4 in equal weight, plus the neutral
// Dirichlet with weight mh_defensive_weight. With vertex_h > 0 half of the
// non-defensive weight goes to Dirichlets centered at points with one
// dominant allele and homozygosity vertex_h, one per allele.
inline std::vector<MhComponent> proposal_ladder(const MutationParams& theta,
                                                const std::vector<double>& matched,
                                                const SamplerConfig& cfg,
                                                double vertex_h = 0.0) {
  std::vector<MhComponent> out;
  const std::size_t k = matched.size();
  const double w = std::clamp(cfg.mh_defensive_weight, 0.0, 1.0);
  const double share = vertex_h > 0.0 ? 0.5 : 1.0;
  const double scales[] = {0.25, 0.5, 1.0, 2.0, 4.0};
  for (double f : scales) {
    std::vector<double> a(k);
    for (std::size_t j = 0; j < k; ++j) a[j] = std::max(f * matched[j], 1e-3);
    out.push_back({share * (1.0 - w) / std::size(scales), std::move(a)});
  }
  if (vertex_h > 0.0) {
    // m1^2 + (1 - m1)^2 / (k - 1) = vertex_h with m1 >= 1/k.
    const double km1 = static_cast<double>(k - 1);
    const double qa = 1.0 + 1.0 / km1, qb = -2.0 / km1, qc = 1.0 / km1 - vertex_h;
    const double m1 = std::clamp(
        (-qb + std::sqrt(std::max(qb * qb - 4.0 * qa * qc, 0.0))) / (2.0 * qa),
        1.0 / static_cast<double>(k), 1.0 - 1e-6);
    const double rest = (1.0 - m1) / km1;
    const double concentrations[] = {2.0, 5.0, 10.0, 20.0, 50.0};
    const double cw = (1.0 - share) * (1.0 - w) /
                      static_cast<double>(std::size(concentrations) * k);
    for (double c : concentrations) {
      for (std::size_t v = 0; v < k; ++v) {
        std::vector<double> a(k, std::max(c * rest, 1e-3));
        a[v] = c * m1;
        out.push_back({cw, std::move(a)});
      }
    }
  }
  if (w > 0.0) out.push_back({w, theta.per_allele()});
  return out;
}

}  // namespace detail

/// Draws from the symmetric-overdominance stationary law at sigma.
inline SelectionSample sample_selection(const MutationParams& theta,
                                        double sigma, std::size_t n,
                                        std::uint64_t seed,
                                        const SamplerConfig& cfg = {}) {
  if (n == 0) throw InvalidInput("sample size must be at least 1");
  if (!std::isfinite(sigma)) throw InvalidInput("sigma must be finite");
  if (sigma == 0.0 ||
      (std::abs(sigma) <= cfg.sigma_switch &&
       detail::predicted_acceptance(theta, sigma, seed, cfg.pilot_size) >=
           cfg.rejection_floor)) {
    return detail::rejection_sample(theta, sigma, n, seed, cfg);
  }
  const std::size_t k = theta.k();
  PoolOptions popt;
  popt.n = cfg.tuning_pool_size;
  popt.seed = derive_seed(seed, id(StreamId::mh), 0xf00d);
  popt.sigma_reach = sigma;
  popt.retain_draws = false;
  popt.threads = cfg.threads;
  const auto pool = build_pool(theta, popt);
  const double g = g_sigma(pool, sigma);
  const double c =
      detail::matched_concentration(g, 1.0 / static_cast<double>(k));
  auto out = detail::independence_mh(
      theta, SelectionModel::symmetric(sigma),
      detail::proposal_ladder(theta, std::vector<double>(k, c), cfg,
                              sigma < 0.0 ? g : 0.0),
      n, seed, cfg);
  out.report.proposal_concentration = c;
  return out;
}

/// Draws under a general selection matrix (MH only). The proposal mean and
/// spread are matched to pool estimates of E_Sel(X) and E_Sel(H).
inline SelectionSample sample_selection(const MutationParams& theta,
                                        const SelectionModel& model,
                                        std::size_t n, std::uint64_t seed,
                                        const SamplerConfig& cfg = {}) {
  if (model.is_symmetric()) {
    return sample_selection(theta, model.sigma(), n, seed, cfg);
  }
  if (n == 0) throw InvalidInput("sample size must be at least 1");
  const std::size_t k = theta.k();
  model.check_dimension(k);
  double reach = 0.0;
  for (double e : model.matrix().entries()) reach = std::max(reach, std::abs(e));
  PoolOptions popt;
  popt.n = cfg.tuning_pool_size;
  popt.seed = derive_seed(seed, id(StreamId::mh), 0xf00d);
  popt.sigma_reach = reach;
  popt.threads = cfg.threads;
  const auto pool = build_pool(theta, popt);
  const auto mom = selected_moments(pool, model);
  double sum_m2 = 0.0;
  for (double m : mom.mean) sum_m2 += m * m;
  const double c = detail::matched_concentration(mom.homozygosity, sum_m2);
  std::vector<double> alpha(k);
  for (std::size_t j = 0; j < k; ++j) alpha[j] = std::max(c * mom.mean[j], 1e-3);
  auto out = detail::independence_mh(
      theta, model, detail::proposal_ladder(theta, alpha, cfg), n, seed, cfg);
  out.report.proposal_concentration = c;
  return out;
}

}  // namespace wfsel
