#pragma once

// Experiment drivers producing plot-ready tables: the MLE curve in h,
// sampling distributions of sigma-hat, bootstrap and posterior draws, CDF
// panels at chosen sigma values, and instability-region hit fractions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "wfsel/core.hpp"
#include "wfsel/density.hpp"
#include "wfsel/inference.hpp"
#include "wfsel/io.hpp"
#include "wfsel/parallel.hpp"
#include "wfsel/random.hpp"
#include "wfsel/sampler.hpp"

namespace wfsel {

struct CurveRow {
  double h;
  MleResult mle;
};

/// sigma-hat over a grid of homozygosities on one pool. The result is
/// non-increasing in h because the pool is fixed.
inline std::vector<CurveRow> mle_curve(std::size_t k,
                                       std::span<const double> h_grid,
                                       const WeightedPool& pool,
                                       unsigned threads = 0) {
  if (k != pool.k()) throw InvalidInput("k does not match the pool");
  const double h_min = 1.0 / static_cast<double>(k);
  for (double h : h_grid) {
    if (!(h > h_min && h < 1.0)) {
      throw InvalidInput("grid point h = " + detail::fmt_double(h) +
                         " lies outside (1/k, 1)");
    }
  }
  SigmaSolver solver(pool);
  std::vector<CurveRow> rows(h_grid.size());
  parallel_for(h_grid.size(), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) rows[i] = {h_grid[i], solver.solve(h_grid[i])};
  });
  return rows;
}

/// Default curve grid: 100 points on [1/k + 0.002, 0.5].
inline std::vector<double> default_h_grid(std::size_t k) {
  const double lo = 1.0 / static_cast<double>(k) + 0.002;
  const double hi = std::max(0.5, lo + 0.1);
  std::vector<double> g(100);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = lo + (hi - lo) * static_cast<double>(i) / 99.0;
  }
  return g;
}

/// sigma-hat across n_datasets populations simulated at (theta, sigma),
/// estimated at the true theta.
inline BootstrapResult sampling_distribution(double theta, double sigma,
                                             std::size_t k,
                                             std::size_t n_datasets,
                                             std::uint64_t seed,
                                             const BootstrapConfig& cfg = {}) {
  return bootstrap(theta, sigma, k, n_datasets, seed, cfg);
}

struct InstabilityRow {
  double sigma;
  double hetero_fraction;
  double homo_fraction;
  std::size_t n;
};

/// For each sigma, the fraction of populations drawn at +sigma with
/// H in (1/k, 1/k + eps) and of populations drawn at -sigma with
/// H in (1 - eps, 1).
inline std::vector<InstabilityRow> instability_probability(
    std::size_t k, double theta, std::span<const double> sigma_grid,
    double epsilon, std::size_t n_per_sigma, std::uint64_t seed,
    const SamplerConfig& cfg = {}) {
  const double h_min = 1.0 / static_cast<double>(k);
  if (!(epsilon > 0.0 && epsilon < 1.0 - h_min)) {
    throw InvalidInput("epsilon must lie in (0, 1 - 1/k)");
  }
  const auto mp = MutationParams::symmetric(theta, k);
  std::vector<InstabilityRow> rows;
  for (std::size_t g = 0; g < sigma_grid.size(); ++g) {
    const double s = sigma_grid[g];
    const auto het = sample_selection(
        mp, s, n_per_sigma, derive_seed(seed, id(StreamId::study), g, 0), cfg);
    const auto hom = sample_selection(
        mp, -s, n_per_sigma, derive_seed(seed, id(StreamId::study), g, 1), cfg);
    std::size_t het_hits = 0, hom_hits = 0;
    for (const auto& x : het.draws) {
      const double h = homozygosity(x).value;
      het_hits += h > h_min && h < h_min + epsilon;
    }
    for (const auto& x : hom.draws) {
      const double h = homozygosity(x).value;
      hom_hits += h > 1.0 - epsilon && h < 1.0;
    }
    const double n = static_cast<double>(n_per_sigma);
    rows.push_back({s, static_cast<double>(het_hits) / n,
                    static_cast<double>(hom_hits) / n, n_per_sigma});
  }
  return rows;
}

struct CdfPanel {
  double sigma;
  double cdf_at_h;
  double q_lo;
  double q_hi;
  /// (h, F_H(h | sigma)) on the panel's h grid.
  std::vector<std::pair<double, double>> curve;
};

namespace detail {

// Weighted quantile of pool homozygosities at sigma, via an index sorted by h.
inline double weighted_quantile(const WeightedPool& pool,
                                std::span<const std::size_t> order,
                                std::span<const double> w, double total,
                                double p) {
  const auto h = pool.homozygosities();
  double acc = 0.0;
  for (std::size_t i : order) {
    acc += w[i];
    if (acc >= p * total) return h[i];
  }
  return h[order.back()];
}

}  // namespace detail

/// Weighted empirical distribution of H at each sigma with the 2.5% and
/// 97.5% weighted percentiles and F_H(h | sigma) at the data's h.
inline std::vector<CdfPanel> cdf_panel(double h, const WeightedPool& pool,
                                       std::span<const double> sigma_values,
                                       std::size_t grid_points = 200,
                                       double q_lo = 0.025, double q_hi = 0.975) {
  const auto hs = pool.homozygosities();
  const auto b = pool.base_log_weights();
  std::vector<std::size_t> order(hs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return hs[i] < hs[j]; });
  const double lo = 1.0 / static_cast<double>(pool.k());
  std::vector<CdfPanel> out;
  std::vector<double> w(hs.size());
  for (double s : sigma_values) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < hs.size(); ++i) mx = std::max(mx, b[i] - s * hs[i]);
    double total = 0.0;
    for (std::size_t i = 0; i < hs.size(); ++i) {
      w[i] = std::exp(b[i] - s * hs[i] - mx);
      total += w[i];
    }
    CdfPanel p;
    p.sigma = s;
    p.cdf_at_h = cdf_homozygosity(pool, s, h);
    p.q_lo = detail::weighted_quantile(pool, order, w, total, q_lo);
    p.q_hi = detail::weighted_quantile(pool, order, w, total, q_hi);
    double acc = 0.0;
    std::size_t pos = 0;
    for (std::size_t g = 0; g < grid_points; ++g) {
      const double x = lo + (1.0 - lo) * static_cast<double>(g + 1) /
                                static_cast<double>(grid_points);
      while (pos < order.size() && hs[order[pos]] <= x) acc += w[order[pos++]];
      p.curve.emplace_back(x, acc / total);
    }
    out.push_back(std::move(p));
  }
  return out;
}

// Study specifications and the table writer used by the CLI.

enum class StudyKind {
  mle_curve,
  sampling_dist,
  bootstrap_hist,
  cdf_panel,
  posterior_hist,
  instability_prob
};

inline const char* to_string(StudyKind k) {
  switch (k) {
    case StudyKind::mle_curve: return "mle_curve";
    case StudyKind::sampling_dist: return "sampling_dist";
    case StudyKind::bootstrap_hist: return "bootstrap_hist";
    case StudyKind::cdf_panel: return "cdf_panel";
    case StudyKind::posterior_hist: return "posterior_hist";
    case StudyKind::instability_prob: return "instability_prob";
  }
  return "unknown";
}

inline std::optional<StudyKind> study_kind_from(std::string_view s) {
  for (auto k : {StudyKind::mle_curve, StudyKind::sampling_dist,
                 StudyKind::bootstrap_hist, StudyKind::cdf_panel,
                 StudyKind::posterior_hist, StudyKind::instability_prob}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

struct StudySpec {
  StudyKind kind = StudyKind::mle_curve;
  std::size_t k = 0;
  double theta = 0.0;
  std::optional<double> sigma;
  std::optional<std::vector<double>> sigma_grid;
  std::optional<std::vector<double>> h_grid;
  double epsilon = 0.09;
  /// Datasets, bootstrap replicates, samples per sigma, or chain length.
  std::size_t replicates = 1000;
  std::size_t pool_size = 100'000;
  /// Dataset for cdf_panel, bootstrap_hist and posterior_hist.
  std::optional<std::string> data;
  std::optional<PriorBounds> prior;
  bool fix_theta = false;
  std::uint64_t seed = 1;
  std::string output;
};

namespace detail {

inline bool sorted_nonempty(const std::optional<std::vector<double>>& g) {
  return g && !g->empty() && std::is_sorted(g->begin(), g->end());
}

}  // namespace detail

/// Offending fields, empty when the spec is valid.
inline std::vector<std::string> validate(const StudySpec& s) {
  std::vector<std::string> bad;
  auto need = [&](bool ok, const char* msg) {
    if (!ok) bad.emplace_back(msg);
  };
  const bool uses_data = s.kind == StudyKind::cdf_panel ||
                         s.kind == StudyKind::bootstrap_hist ||
                         s.kind == StudyKind::posterior_hist;
  if (uses_data) {
    need(s.data.has_value(), "data: required for this kind");
  } else {
    need(s.k >= 2, "k: must be at least 2");
  }
  if (s.kind != StudyKind::posterior_hist && s.kind != StudyKind::bootstrap_hist) {
    need(s.theta > 0.0 && std::isfinite(s.theta), "theta: must be positive");
  }
  need(s.pool_size >= 1000, "pool_size: must be at least 1000");
  need(!s.output.empty(), "output: path required");
  switch (s.kind) {
    case StudyKind::mle_curve:
      if (s.h_grid) {
        need(detail::sorted_nonempty(s.h_grid), "h_grid: must be non-empty and sorted");
        if (s.k >= 2 && !s.h_grid->empty()) {
          need(s.h_grid->front() > 1.0 / static_cast<double>(s.k) &&
                   s.h_grid->back() < 1.0,
               "h_grid: points must lie in (1/k, 1)");
        }
      }
      break;
    case StudyKind::sampling_dist:
      need(s.sigma.has_value(), "sigma: required");
      need(s.replicates >= 100, "replicates: must be at least 100");
      break;
    case StudyKind::bootstrap_hist:
      need(s.replicates >= 100, "replicates: must be at least 100");
      break;
    case StudyKind::cdf_panel:
      need(detail::sorted_nonempty(s.sigma_grid),
           "sigma_grid: must be non-empty and sorted");
      break;
    case StudyKind::posterior_hist:
      need(s.replicates >= 1000, "replicates: chain length must be at least 1000");
      if (s.fix_theta) need(s.theta > 0.0, "theta: required when fix_theta is set");
      break;
    case StudyKind::instability_prob:
      need(detail::sorted_nonempty(s.sigma_grid),
           "sigma_grid: must be non-empty and sorted");
      need(s.replicates >= 100, "replicates: must be at least 100");
      if (s.k >= 2) {
        need(s.epsilon > 0.0 && s.epsilon < 1.0 - 1.0 / static_cast<double>(s.k),
             "epsilon: must lie in (0, 1 - 1/k)");
      }
      break;
  }
  return bad;
}

inline json to_json(const StudySpec& s) {
  json j;
  j["kind"] = to_string(s.kind);
  if (s.k) j["k"] = s.k;
  if (s.theta > 0.0) j["theta"] = s.theta;
  if (s.sigma) j["sigma"] = *s.sigma;
  if (s.sigma_grid) j["sigma_grid"] = *s.sigma_grid;
  if (s.h_grid) j["h_grid"] = *s.h_grid;
  j["epsilon"] = s.epsilon;
  j["replicates"] = s.replicates;
  j["pool_size"] = s.pool_size;
  if (s.data) j["data"] = *s.data;
  if (s.prior) j["prior"] = to_json(*s.prior);
  j["fix_theta"] = s.fix_theta;
  j["seed"] = s.seed;
  j["output"] = s.output;
  return j;
}

/// Parses a spec, collecting every schema problem before failing.
inline StudySpec study_spec_from_json(const json& j) {
  std::vector<std::string> bad;
  StudySpec s;
  if (!j.is_object()) throw InvalidInput("study spec must be a JSON object");
  static const std::vector<std::string> known{
      "kind", "k", "theta", "sigma", "sigma_grid", "h_grid", "epsilon",
      "replicates", "pool_size", "data", "prior", "fix_theta", "seed", "output"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      bad.push_back(key + ": unknown field");
    }
  }
  auto get = [&](const char* key, auto& out) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(out);
    } catch (const json::exception&) {
      bad.push_back(std::string(key) + ": wrong type");
    }
  };
  std::string kind;
  get("kind", kind);
  if (auto k = study_kind_from(kind)) {
    s.kind = *k;
  } else {
    bad.push_back("kind: must be one of mle_curve, sampling_dist, bootstrap_hist, "
                  "cdf_panel, posterior_hist, instability_prob");
  }
  get("k", s.k);
  get("theta", s.theta);
  if (j.contains("sigma")) {
    double v = 0.0;
    get("sigma", v);
    s.sigma = v;
  }
  if (j.contains("sigma_grid")) {
    std::vector<double> v;
    get("sigma_grid", v);
    s.sigma_grid = v;
  }
  if (j.contains("h_grid")) {
    std::vector<double> v;
    get("h_grid", v);
    s.h_grid = v;
  }
  get("epsilon", s.epsilon);
  get("replicates", s.replicates);
  get("pool_size", s.pool_size);
  if (j.contains("data")) {
    std::string d;
    get("data", d);
    s.data = d;
  }
  if (j.contains("prior")) {
    PriorBounds p;
    std::vector<double> t{p.theta_lo, p.theta_hi}, sg{p.sigma_lo, p.sigma_hi};
    const auto& pj = j.at("prior");
    try {
      if (pj.contains("theta")) pj.at("theta").get_to(t);
      if (pj.contains("sigma")) pj.at("sigma").get_to(sg);
    } catch (const json::exception&) {
      bad.emplace_back("prior: wrong type");
    }
    if (t.size() == 2 && sg.size() == 2) {
      s.prior = PriorBounds{t[0], t[1], sg[0], sg[1]};
    } else {
      bad.emplace_back("prior: theta and sigma must be [lo, hi] pairs");
    }
  }
  get("fix_theta", s.fix_theta);
  get("seed", s.seed);
  get("output", s.output);
  if (bad.empty()) {
    auto more = validate(s);
    bad.insert(bad.end(), more.begin(), more.end());
  }
  if (!bad.empty()) {
    std::string msg = "invalid study spec:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw InvalidInput(msg);
  }
  return s;
}

/// A CSV table with a fixed header plus run metadata for the sidecar.
struct StudyTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  json summary = json::object();

  void write_csv(std::ostream& out) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      out << (i ? "," : "") << header[i];
    }
    out << '\n';
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
      out << '\n';
    }
  }
};

namespace detail {

inline std::string cell(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return fmt_double(v);
}

inline SimplexPoint resolve_data(const std::string& d) {
  if (auto named = datasets::by_name(d)) return *named;
  const auto sets = read_datasets_file(d);
  return sets.front().x;
}

inline PoolOptions study_pool(const StudySpec& s, std::uint64_t stream,
                              double reach, unsigned threads) {
  PoolOptions po;
  po.n = s.pool_size;
  po.seed = derive_seed(s.seed, id(StreamId::study), stream);
  po.sigma_reach = reach;
  po.retain_draws = false;
  po.threads = threads;
  return po;
}

}  // namespace detail

/// Runs a validated spec. CSV schemas per kind:
///   mle_curve:        h,sigma_hat,status
///   sampling_dist:    replicate,h,sigma_hat,status
///   bootstrap_hist:   replicate,h,sigma_hat,status
///   cdf_panel:        sigma,h,cdf
///   posterior_hist:   draw,theta,sigma,log_posterior
///   instability_prob: sigma,hetero_fraction,homo_fraction,n
inline StudyTable run_study(const StudySpec& s, unsigned threads = 0) {
  if (auto bad = validate(s); !bad.empty()) {
    std::string msg = "invalid study spec:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw InvalidInput(msg);
  }
  StudyTable t;
  auto replicate_rows = [&](const BootstrapResult& r) {
    t.header = {"replicate", "h", "sigma_hat", "status"};
    for (std::size_t i = 0; i < r.estimates.size(); ++i) {
      t.rows.push_back({std::to_string(i), detail::cell(r.data_h[i]),
                        detail::cell(r.estimates[i].extended_value()),
                        to_string(r.estimates[i].status)});
    }
    t.summary = to_json(r);
  };
  BootstrapConfig bc;
  bc.pool_size = s.pool_size;
  bc.threads = threads;

  switch (s.kind) {
    case StudyKind::mle_curve: {
      const auto grid = s.h_grid.value_or(default_h_grid(s.k));
      const auto pool = build_pool(MutationParams::symmetric(s.theta, s.k),
                                   detail::study_pool(s, 1, 2000.0, threads));
      const auto rows = mle_curve(s.k, grid, pool, threads);
      t.header = {"h", "sigma_hat", "status"};
      for (const auto& r : rows) {
        t.rows.push_back({detail::cell(r.h), detail::cell(r.mle.extended_value()),
                          to_string(r.mle.status)});
      }
      t.summary["pool_min_h"] = pool.min_h();
      break;
    }
    case StudyKind::sampling_dist:
      replicate_rows(sampling_distribution(s.theta, *s.sigma, s.k, s.replicates,
                                           s.seed, bc));
      break;
    case StudyKind::bootstrap_hist: {
      const auto x = detail::resolve_data(*s.data);
      double theta = s.theta, sigma = s.sigma.value_or(0.0);
      if (!(theta > 0.0) || !s.sigma) {
        JointConfig jc;
        jc.pool_size = s.pool_size;
        jc.threads = threads;
        const auto fit = mle_joint(x, derive_seed(s.seed, id(StreamId::study), 2), jc);
        t.summary["fit"] = to_json(fit);
        if (!fit.converged()) {
          throw InvalidInput(std::string("cannot bootstrap: fitted status is ") +
                             to_string(fit.status));
        }
        if (!(theta > 0.0)) theta = *fit.theta_hat;
        if (!s.sigma) sigma = fit.sigma_hat;
      }
      auto fit = t.summary;
      replicate_rows(bootstrap(theta, sigma, x.k(), s.replicates, s.seed, bc));
      if (fit.contains("fit")) t.summary["fit"] = fit["fit"];
      break;
    }
    case StudyKind::cdf_panel: {
      const auto x = detail::resolve_data(*s.data);
      const double reach = std::max(std::abs(s.sigma_grid->front()),
                                    std::abs(s.sigma_grid->back()));
      const auto pool = build_pool(MutationParams::symmetric(s.theta, x.k()),
                                   detail::study_pool(s, 3, reach, threads));
      const double h = homozygosity(x).value;
      const auto panels = cdf_panel(h, pool, *s.sigma_grid);
      t.header = {"sigma", "h", "cdf"};
      json marks = json::array();
      for (const auto& p : panels) {
        for (const auto& [hx, f] : p.curve) {
          t.rows.push_back({detail::cell(p.sigma), detail::cell(hx), detail::cell(f)});
        }
        marks.push_back({{"sigma", p.sigma}, {"cdf_at_h", p.cdf_at_h},
                         {"q025", p.q_lo}, {"q975", p.q_hi}});
      }
      t.summary["h"] = h;
      t.summary["panels"] = marks;
      break;
    }
    case StudyKind::posterior_hist: {
      const auto x = detail::resolve_data(*s.data);
      PosteriorConfig pc;
      pc.pool_size = s.pool_size;
      pc.threads = threads;
      if (s.fix_theta) pc.fixed_theta = s.theta;
      const auto prior = s.prior.value_or(PriorBounds{});
      const auto chain = posterior_sample(x, prior, s.replicates, s.seed, pc);
      t.header = {"draw", "theta", "sigma", "log_posterior"};
      for (std::size_t i = 0; i < chain.draws.size(); ++i) {
        t.rows.push_back({std::to_string(i), detail::cell(chain.draws[i].first),
                          detail::cell(chain.draws[i].second),
                          detail::cell(chain.log_posterior[i])});
      }
      const auto sum = posterior_summary(chain, 0.95);
      t.summary["chain"] = to_json(chain);
      t.summary["credible_interval"] = to_json(sum.interval);
      t.summary["mode"] = {{"theta", sum.mode_theta}, {"sigma", sum.mode_sigma}};
      break;
    }
    case StudyKind::instability_prob: {
      SamplerConfig sc;
      sc.threads = threads;
      const auto rows = instability_probability(s.k, s.theta, *s.sigma_grid,
                                                s.epsilon, s.replicates, s.seed, sc);
      t.header = {"sigma", "hetero_fraction", "homo_fraction", "n"};
      for (const auto& r : rows) {
        t.rows.push_back({detail::cell(r.sigma), detail::cell(r.hetero_fraction),
                          detail::cell(r.homo_fraction), std::to_string(r.n)});
      }
      break;
    }
  }
  return t;
}

}  // namespace wfsel
