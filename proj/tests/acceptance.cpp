// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Monte Carlo configurations are fixed by seed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "wfsel/wfsel.hpp"

using namespace wfsel;

namespace {

int failures = 0;

void report(const std::string& id, bool pass, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

bool within_rel(double v, double target, double rel) {
  return std::abs(v - target) <= rel * std::abs(target);
}

std::string num(double v) { return detail::fmt_double(v); }

std::string interval(double lo, double hi) { return "(" + num(lo) + ", " + num(hi) + ")"; }

void timed(const char* label, const std::function<void()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body();
  } catch (const std::exception& e) {
    report(label, false, std::string("exception: ") + e.what());
  }
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
  std::printf("     %s took %.1f s\n", label, dt.count());
  std::fflush(stdout);
}

WeightedPool big_pool(double theta, std::size_t k, std::uint64_t seed,
                      std::size_t n = 1'000'000, double reach = 2000.0) {
  PoolOptions po;
  po.n = n;
  po.seed = seed;
  po.sigma_reach = reach;
  po.retain_draws = false;
  return build_pool(MutationParams::symmetric(theta, k), po);
}

MleResult joint_mle(const SimplexPoint& x) {
  JointConfig jc;
  jc.pool_size = 1'000'000;
  return mle_joint(x, 2024, jc);
}

// Cached because criteria 3 and 5 condition on the KIR fit.
const MleResult& kir_fit() {
  static const MleResult fit = joint_mle(datasets::kir());
  return fit;
}

void homozygosity_values() {
  const double lyme = homozygosity(datasets::lyme()).value;
  const double kir = homozygosity(datasets::kir()).value;
  report("1 homozygosity lyme", within(lyme, 0.288, 0.0005), num(lyme) + " vs 0.288 +- 0.0005");
  report("1 homozygosity kir", within(kir, 0.172, 0.0005), num(kir) + " vs 0.172 +- 0.0005");
}

void joint_mle_lyme() {
  const auto r = joint_mle(datasets::lyme());
  report("2 joint MLE lyme theta", r.converged() && within(r.theta_hat.value_or(NAN), 4.8, 0.5),
         num(r.theta_hat.value_or(NAN)) + " vs 4.8 +- 0.5");
  report("2 joint MLE lyme sigma", r.converged() && within(r.sigma_hat, 35.1, 4.0),
         num(r.sigma_hat) + " vs 35.1 +- 4 (" + to_string(r.status) + ")");
}

void monotone_intervals() {
  {
    const auto pool = big_pool(4.8, 4, 301);
    const auto ci = monotone_ci(homozygosity(datasets::lyme()), pool, 0.025, 0.025);
    report("3 monotone CI lyme lower", within(ci.lower, -8.0, 3.0), num(ci.lower) + " vs -8 +- 3");
    report("3 monotone CI lyme upper", within(ci.upper, 105.0, 10.0),
           num(ci.upper) + " vs 105 +- 10");
  }
  const auto& fit = kir_fit();
  const auto pool = big_pool(fit.theta_hat.value_or(NAN), 8, 302);
  const auto ci = monotone_ci(homozygosity(datasets::kir()), pool, 0.025, 0.025);
  const std::string at = " at theta_hat " + num(fit.theta_hat.value_or(NAN));
  report("3 monotone CI kir lower", within(ci.lower, -10.0, 3.0),
         num(ci.lower) + " vs -10 +- 3" + at);
  report("3 monotone CI kir upper", within(ci.upper, 159.0, 15.0),
         num(ci.upper) + " vs 159 +- 15" + at);
}

void cdf_checks() {
  const auto pool = big_pool(4.8, 4, 401);
  const double h = homozygosity(datasets::lyme()).value;
  const double f = cdf_homozygosity(pool, 17.25, h);
  report("4 CDF at sigma 17.25", within(f, 0.354, 0.015),
         "P(H <= " + num(h) + ") = " + num(f) + " vs 0.354 +- 0.015 (at h = 0.288: " +
             num(cdf_homozygosity(pool, 17.25, 0.288)) + ")");
  const double upper = 1.0 - cdf_homozygosity(pool, 681.2, h);
  report("4 upper tail at sigma 681.2", upper < 0.005, "P(H >= h) = " + num(upper) + " vs < 0.005");
}

void bootstraps() {
  BootstrapConfig cfg;
  {
    const auto b = bootstrap(4.8, 35.1, 4, 10'000, 501, cfg);
    const auto& ci = b.percentile_interval;
    report("5 bootstrap lyme SE", within_rel(b.standard_error, 176.4, 0.4),
           num(b.standard_error) + " vs 176.4 +- 40%, " + std::to_string(b.n_unbounded) +
               " unbounded");
    report("5 bootstrap lyme lower", within_rel(ci.lower, 17.2, 0.3), num(ci.lower) + " vs 17.2 +- 30%");
    report("5 bootstrap lyme upper", within_rel(ci.upper, 681.3, 0.3),
           num(ci.upper) + " vs 681.3 +- 30%");
  }
  const auto& fit = kir_fit();
  const auto b = bootstrap(fit.theta_hat.value_or(NAN), fit.sigma_hat, 8, 10'000, 502, cfg);
  const auto& ci = b.percentile_interval;
  const std::string at = " at (" + num(fit.theta_hat.value_or(NAN)) + ", " + num(fit.sigma_hat) + ")";
  report("5 bootstrap kir lower", within_rel(ci.lower, 21.1, 0.3),
         num(ci.lower) + " vs 21.1 +- 30%" + at);
  report("5 bootstrap kir upper", within_rel(ci.upper, 396.4, 0.3),
         num(ci.upper) + " vs 396.4 +- 30%" + at);
}

void posterior_check(const std::string& id, const PosteriorSummary& s, const PosteriorChain& c,
                     double lo, double hi) {
  const auto& ci = s.interval;
  const bool pass = within_rel(ci.lower, lo, 0.25) && within_rel(ci.upper, hi, 0.25);
  report(id, pass,
         interval(ci.lower, ci.upper) + " vs " + interval(lo, hi) +
             " +- 25%, acceptance " + num(c.acceptance_rate));
}

void posteriors() {
  const PriorBounds prior;
  {
    const auto c = posterior_sample(datasets::lyme(), prior, 100'000, 601);
    posterior_check("6 posterior lyme joint", posterior_summary(c, 0.95), c, 10.8, 124.9);
  }
  const auto joint = posterior_sample(datasets::kir(), prior, 100'000, 602);
  const auto js = posterior_summary(joint, 0.95);
  PosteriorConfig fixed;
  fixed.fixed_theta = js.mode_theta;
  const auto c = posterior_sample(datasets::kir(), prior, 100'000, 603, fixed);
  posterior_check("6 posterior kir fixed theta " + num(js.mode_theta), posterior_summary(c, 0.95),
                  c, 6.3, 182.9);
  posterior_check("6 posterior kir joint", js, joint, 4.3, 205.5);
}

void instability_curve() {
  const auto pool = big_pool(5.0, 20, 701, 1'000'000, 5000.0);
  const std::vector<double> grid{0.13, 0.08};
  const auto rows = mle_curve(20, grid, pool);
  const auto& a = rows[0].mle;
  const auto& b = rows[1].mle;
  report("7 sigma_hat(0.13)", a.converged() && a.sigma_hat >= 300 && a.sigma_hat <= 400,
         num(a.sigma_hat) + " (" + to_string(a.status) + ") vs [300, 400]");
  report("7 sigma_hat(0.08)",
         b.status == MleStatus::unbounded_above || (b.converged() && b.sigma_hat > 900),
         num(b.sigma_hat) + " (" + to_string(b.status) + ") vs > 900 or unbounded_above");
}

void instability_ordering() {
  const std::vector<double> grid{0, 10, 20, 30, 40, 50, 75, 100};
  const auto rows = instability_probability(10, 5.0, grid, 0.09, 1000, 801);
  for (const auto& r : rows) {
    const double n = static_cast<double>(r.n);
    const double band = 3.0 * std::sqrt(r.hetero_fraction * (1 - r.hetero_fraction) / n +
                                         r.homo_fraction * (1 - r.homo_fraction) / n);
    report("8 ordering sigma " + num(r.sigma), r.hetero_fraction - r.homo_fraction > band,
           "hetero " + num(r.hetero_fraction) + " homo " + num(r.homo_fraction) + " band " +
               num(band));
  }
}

void monotonicity() {
  const auto pool = big_pool(4.8, 4, 901, 100'000);
  const double h = homozygosity(datasets::lyme()).value;
  bool ok = true;
  double prev_g = INFINITY, prev_f = -1.0;
  for (int i = 0; i < 50; ++i) {
    const double s = -500.0 + 2500.0 * i / 49.0;
    const double g = g_sigma(pool, s), f = cdf_homozygosity(pool, s, h);
    ok = ok && g <= prev_g && f >= prev_f;
    prev_g = g;
    prev_f = f;
  }
  report("9 monotone g_sigma and cdf", ok, "50-point grid on [-500, 2000]");
}

void log_normalizer_derivative() {
  const auto pool = build_pool(MutationParams::symmetric(4.8, 4), 1.2, 100'000, 902);
  double worst = 0.0;
  for (double s : {-50.0, 0.5, 20.0, 150.0}) {
    const double d = 1e-3;
    const double fd =
        (log_normalizer(pool, s + d).value - log_normalizer(pool, s - d).value) / (2 * d);
    const double g = g_sigma(pool, s);
    worst = std::max(worst, std::abs(fd + g) / std::abs(g));
  }
  report("9 d log Z / d sigma = -g", worst <= 1e-6, "worst relative error " + num(worst));
}

void general_score() {
  const std::size_t k = 3;
  std::mt19937_64 rng(903);
  std::normal_distribution<double> nd(0.0, 3.0);
  std::vector<double> e(k * k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i; j < k; ++j) e[i * k + j] = e[j * k + i] = nd(rng);
  const SimplexPoint x({0.2, 0.5, 0.3});
  const auto mp = MutationParams::symmetric(3.0, k);
  PoolOptions po;
  po.n = 50'000;
  po.seed = 904;
  const auto pool = build_pool(mp, po);
  const auto score = score_general(x, pool, SelectionModel::general(SelectionMatrix(k, e)));
  auto ll = [&](const std::vector<double>& m) {
    return log_likelihood(x, mp, SelectionModel::general(SelectionMatrix(k, m)), pool).value;
  };
  double worst = 0.0;
  const double d = 1e-4;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      auto up = e, dn = e;
      up[i * k + j] += d;
      dn[i * k + j] -= d;
      if (i != j) {
        up[j * k + i] += d;
        dn[j * k + i] -= d;
      }
      const double fd = (ll(up) - ll(dn)) / (2 * d);
      // A symmetric perturbation of an off-diagonal pair moves two entries.
      const double expected = (i == j ? 1.0 : 2.0) * score(i, j);
      worst = std::max(worst, std::abs(fd - expected) / std::max(1.0, std::abs(expected)));
    }
  }
  report("9 general score vs finite differences", worst <= 1e-6, "worst error " + num(worst));
}

void sampler_agreement() {
  const auto mp = MutationParams::symmetric(4.8, 4);
  SamplerConfig rej, mh;
  rej.sigma_switch = 1e9;
  mh.sigma_switch = 0.0;
  const std::size_t n = 5000;
  const auto a = sample_selection(mp, 20.0, n, 905, rej);
  const auto b = sample_selection(mp, 20.0, n, 906, mh);
  std::vector<double> ha, hb;
  for (const auto& x : a.draws) ha.push_back(homozygosity(x).value);
  for (const auto& x : b.draws) hb.push_back(homozygosity(x).value);
  const double d = ks_statistic(ha, hb), crit = ks_critical(n, n, 0.001);
  report("9 rejection vs MH KS", d < crit,
         "D = " + num(d) + " vs critical " + num(crit) + " (" + to_string(a.report.method) + ", " +
             to_string(b.report.method) + ")");
}

void concentration() {
  const auto mp = MutationParams::symmetric(4.8, 4);
  std::vector<double> m;
  for (double s : {10.0, 100.0, 1000.0}) {
    const auto d = sample_selection(mp, s, 2000, 907);
    double acc = 0.0;
    for (const auto& x : d.draws) acc += std::abs(homozygosity(x).value - 0.25);
    m.push_back(acc / static_cast<double>(d.draws.size()));
  }
  report("9 concentration near centroid", m[0] > m[1] && m[1] > m[2],
         "mean |H - 1/k| " + num(m[0]) + ", " + num(m[1]) + ", " + num(m[2]));
}

void composition() {
  const auto het = optimal_composition(SelectionModel::symmetric(35.0), 6);
  double dev = 0.0;
  for (double v : het.point) dev = std::max(dev, std::abs(v - 1.0 / 6.0));
  const auto hom = optimal_composition(SelectionModel::symmetric(-35.0), 6);
  const double top = *std::max_element(hom.point.begin(), hom.point.end());
  report("9 optimal composition", dev <= 1e-6 && hom.boundary && within(top, 1.0, 1e-6),
         "centroid deviation " + num(dev) + ", homozygote-advantage max coordinate " + num(top));
}

void coverage() {
  const double theta = 5.0, sigma = 30.0;
  const std::size_t k = 4, m = 500;
  const auto pool = big_pool(theta, k, 908, 100'000);
  const auto data = sample_selection(MutationParams::symmetric(theta, k), sigma, m, 909);
  std::size_t hit = 0;
  for (const auto& x : data.draws) {
    const auto ci = monotone_ci(homozygosity(x), pool, 0.05, 0.05);
    hit += ci.lower <= sigma && sigma <= ci.upper;
  }
  const double cov = static_cast<double>(hit) / static_cast<double>(m);
  report("9 monotone CI coverage", cov >= 0.855 && cov <= 0.945,
         num(cov) + " of 500 90% intervals vs [0.855, 0.945]");
}

}  // namespace

int main() {
  std::printf("threads: %u\n", resolve_threads());
  timed("criterion 1", homozygosity_values);
  timed("criterion 2", joint_mle_lyme);
  timed("criterion 3", monotone_intervals);
  timed("criterion 4", cdf_checks);
  timed("criterion 5", bootstraps);
  timed("criterion 6", posteriors);
  timed("criterion 7", instability_curve);
  timed("criterion 8", instability_ordering);
  timed("criterion 9", [] {
    monotonicity();
    log_normalizer_derivative();
    general_score();
    sampler_agreement();
    concentration();
    composition();
    coverage();
  });
  std::printf("%d failing check%s\n", failures, failures == 1 ? "" : "s");
  return failures == 0 ? 0 : 1;
}
