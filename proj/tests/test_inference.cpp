#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "wfsel/inference.hpp"

using namespace wfsel;

namespace {

WeightedPool lyme_pool(std::size_t n = 100000, std::uint64_t seed = 1, double reach = 2000) {
  PoolOptions po;
  po.n = n;
  po.seed = seed;
  po.sigma_reach = reach;
  po.retain_draws = false;
  return build_pool(MutationParams::symmetric(4.8, 4), po);
}

}  // namespace

TEST(Mle, NeutralMeanGivesZero) {
  const auto pool = build_pool(MutationParams::symmetric(5.0, 4), 1.25, 100000, 3);
  const double h = g_sigma(pool, 0.0);
  const auto r = mle_sigma(h, pool);
  ASSERT_TRUE(r.converged());
  EXPECT_NEAR(r.sigma_hat, 0.0, 1e-4);
}

TEST(Mle, LymeConverges) {
  const auto pool = lyme_pool();
  const auto r = mle_sigma(homozygosity(datasets::lyme()), pool);
  ASSERT_TRUE(r.converged());
  EXPECT_GT(r.sigma_hat, 25.0);
  EXPECT_LT(r.sigma_hat, 45.0);
  EXPECT_LT(std::abs(r.score_at_solution), 1e-8);
  EXPECT_GT(r.ess_at_solution, 200.0);
}

TEST(Mle, BracketHoldsSignChange) {
  const auto pool = lyme_pool(50000, 2);
  for (double h : {0.26, 0.2876, 0.35, 0.6}) {
    const auto r = mle_sigma(h, pool);
    ASSERT_TRUE(r.converged()) << h;
    EXPECT_LE(r.bracket.first, r.sigma_hat);
    EXPECT_GE(r.bracket.second, r.sigma_hat);
    const double fl = g_sigma(pool, r.bracket.first) - h;
    const double fh = g_sigma(pool, r.bracket.second) - h;
    EXPECT_TRUE(fl * fh <= 0.0 || std::abs(r.score_at_solution) < 1e-8) << h;
  }
}

TEST(Mle, SingularPointStatuses) {
  const auto pool = lyme_pool(20000, 4);
  const auto above = mle_sigma(Homozygosity{0.25, 4}, pool);
  EXPECT_EQ(above.status, MleStatus::unbounded_above);
  EXPECT_EQ(above.extended_value(), std::numeric_limits<double>::infinity());
  EXPECT_EQ(mle_sigma(pool.min_h(), pool).status, MleStatus::unbounded_above);
  EXPECT_EQ(mle_sigma(pool.max_h(), pool).status, MleStatus::unbounded_below);
  EXPECT_EQ(mle_sigma(0.9999999, pool).status, MleStatus::unbounded_below);
}

TEST(Mle, OutsideSearchWindow) {
  const auto pool = lyme_pool(20000, 4);
  MleOptions narrow;
  narrow.sigma_max = 10.0;
  const auto r = mle_sigma(homozygosity(datasets::lyme()), pool, narrow);
  EXPECT_EQ(r.status, MleStatus::outside_pool_range);
}

TEST(Mle, DecreasingInData) {
  const auto pool = lyme_pool(50000, 5);
  double prev = std::numeric_limits<double>::infinity();
  for (double h = 0.2502; h < 0.95; h += 0.01) {
    const double s = mle_sigma(h, pool).extended_value();
    EXPECT_LE(s, prev) << h;
    prev = s;
  }
}

TEST(Mle, TabulatedSolverAgrees) {
  const auto pool = lyme_pool(50000, 6);
  SigmaSolver plain(pool), table(pool);
  table.tabulate(200);
  for (double h : {0.2503, 0.27, 0.2876, 0.4, 0.8}) {
    const auto a = plain.solve(h), b = table.solve(h);
    ASSERT_EQ(a.status, b.status);
    if (a.converged()) {
      // g is nearly flat at large sigma, so compare relatively and via the score.
      EXPECT_NEAR(a.sigma_hat, b.sigma_hat, 1e-5 * std::max(1.0, std::abs(a.sigma_hat))) << h;
      EXPECT_LT(std::abs(b.score_at_solution), 1e-7) << h;
    }
  }
}

TEST(Mle, JointUniformIsSingular) {
  JointConfig jc;
  jc.pool_size = 5000;
  const auto r = mle_joint(SimplexPoint::centroid(4), 1, jc);
  EXPECT_EQ(r.status, MleStatus::unbounded_above);
}

TEST(Mle, JointNullSelfConsistency) {
  const auto mp = MutationParams::symmetric(5.0, 4);
  const auto data = sample_selection(mp, 0.0, 50, 77);
  JointConfig jc;
  jc.pool_size = 20000;
  jc.theta_tol = 0.05;
  jc.threads = 1;
  std::vector<double> est(50);
  parallel_for(50, 0, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) est[i] = mle_joint(data.draws[i], 123, jc).extended_value();
  });
  std::vector<double> finite, absval;
  for (double v : est) {
    if (std::isfinite(v)) finite.push_back(v);
    absval.push_back(std::abs(v));
  }
  ASSERT_GT(finite.size(), 40u);
  const double sd = stddev(finite);
  EXPECT_LT(quantile(absval, 0.5), 3.0 * sd);
}

TEST(MonotoneCi, LevelAndOrdering) {
  const auto pool = lyme_pool();
  const auto ci = monotone_ci(homozygosity(datasets::lyme()), pool, 0.025, 0.025);
  EXPECT_EQ(ci.method, IntervalMethod::monotone_exact);
  EXPECT_NEAR(ci.level, 0.95, 1e-15);
  EXPECT_LT(ci.lower, ci.upper);
  EXPECT_NEAR(cdf_homozygosity(pool, ci.lower, 0.287638), 0.025, 1e-6);
  EXPECT_NEAR(cdf_homozygosity(pool, ci.upper, 0.287638), 0.975, 1e-6);
  EXPECT_FALSE(ci.lower_at_bound || ci.upper_at_bound);
}

TEST(MonotoneCi, MedianSplitIsDegenerate) {
  const auto pool = lyme_pool(50000);
  const auto h = homozygosity(datasets::lyme());
  const auto ci = monotone_ci(h, pool, 0.5 - 1e-12, 0.5);
  EXPECT_NEAR(ci.lower, ci.upper, 1e-3);
  EXPECT_NEAR(cdf_homozygosity(pool, ci.lower, h), 0.5, 1e-6);
}

TEST(MonotoneCi, NarrowerLevelNested) {
  const auto pool = lyme_pool(50000);
  const auto h = homozygosity(datasets::lyme());
  const auto wide = monotone_ci(h, pool, 0.025, 0.025);
  const auto narrow = monotone_ci(h, pool, 0.25, 0.25);
  EXPECT_LT(wide.lower, narrow.lower);
  EXPECT_GT(wide.upper, narrow.upper);
}

TEST(MonotoneCi, AdvisoryAtRangeBound) {
  const auto pool = lyme_pool(50000);
  MonotoneCiOptions opt;
  opt.sigma_hi = 50.0;
  const auto ci = monotone_ci(homozygosity(datasets::lyme()), pool, 0.025, 0.025, opt);
  EXPECT_TRUE(ci.upper_at_bound);
  EXPECT_EQ(ci.upper, 50.0);
}

TEST(MonotoneCi, RejectsBadAlpha) {
  const auto pool = lyme_pool(5000);
  const auto h = homozygosity(datasets::lyme());
  EXPECT_THROW(monotone_ci(h, pool, 0.6, 0.5), InvalidInput);
  EXPECT_THROW(monotone_ci(h, pool, 0.0, 0.0), InvalidInput);
  EXPECT_THROW(monotone_ci(Homozygosity{0.3, 5}, pool, 0.025, 0.025), InvalidInput);
}

TEST(Bootstrap, NullIntervalContainsZero) {
  BootstrapConfig bc;
  bc.pool_size = 50000;
  const auto b = bootstrap(5.0, 0.0, 4, 1000, 21, bc);
  EXPECT_EQ(b.estimates.size(), 1000u);
  EXPECT_LE(b.percentile_interval.lower, 0.0);
  EXPECT_GE(b.percentile_interval.upper, 0.0);
  EXPECT_EQ(b.percentile_interval.method, IntervalMethod::bootstrap_percentile);
  EXPECT_FALSE(b.heavy_tail);
}

TEST(Bootstrap, HeavyRightTailUnderHeterozygoteAdvantage) {
  BootstrapConfig bc;
  bc.pool_size = 50000;
  const auto b = bootstrap(5.0, 100.0, 10, 1000, 8, bc);
  std::vector<double> conv;
  for (const auto& e : b.estimates)
    if (e.converged()) conv.push_back(e.sigma_hat);
  EXPECT_GT(quantile(conv, 0.99), 3.0 * quantile(conv, 0.5));
}

TEST(Bootstrap, DeterministicAndValidated) {
  BootstrapConfig a, c;
  a.pool_size = c.pool_size = 20000;
  a.threads = 1;
  c.threads = 3;
  const auto x = bootstrap(4.8, 35.1, 4, 200, 5, a);
  const auto y = bootstrap(4.8, 35.1, 4, 200, 5, c);
  for (std::size_t i = 0; i < 200; ++i) {
    EXPECT_EQ(x.estimates[i].sigma_hat, y.estimates[i].sigma_hat);
  }
  EXPECT_EQ(x.standard_error, y.standard_error);
  EXPECT_THROW(bootstrap(4.8, 35.1, 4, 99, 5, a), InvalidInput);
}

TEST(Bootstrap, UnboundedCountedNotAveraged) {
  BootstrapResult r;
  for (int i = 0; i < 70; ++i) {
    MleResult m;
    m.sigma_hat = i;
    r.estimates.push_back(m);
  }
  for (int i = 0; i < 30; ++i) {
    MleResult m;
    m.status = MleStatus::unbounded_above;
    m.sigma_hat = std::numeric_limits<double>::infinity();
    r.estimates.push_back(m);
  }
  summarize_replicates(r, 0.95);
  EXPECT_EQ(r.n_unbounded, 30u);
  EXPECT_TRUE(r.heavy_tail);
  EXPECT_TRUE(std::isfinite(r.standard_error));
  EXPECT_EQ(r.percentile_interval.upper, std::numeric_limits<double>::infinity());
}

class PosteriorTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    PosteriorConfig pc;
    pc.pool_size = 20000;
    pc.burn_in = 500;
    pc.keep_trace = true;
    chain_ = new PosteriorChain(posterior_sample(datasets::lyme(), PriorBounds{}, 5000, 31, pc));
  }
  static void TearDownTestSuite() { delete chain_; }
  static PosteriorChain* chain_;
};
PosteriorChain* PosteriorTest::chain_ = nullptr;

TEST_F(PosteriorTest, DrawsInsidePriorBox) {
  const auto& c = *chain_;
  ASSERT_EQ(c.draws.size(), 5000u);
  for (std::size_t i = 0; i < c.draws.size(); ++i) {
    EXPECT_TRUE(c.prior.contains(c.draws[i].first, c.draws[i].second));
    EXPECT_TRUE(std::isfinite(c.log_posterior[i]));
  }
  EXPECT_GT(c.acceptance_rate, 0.0);
  EXPECT_LT(c.acceptance_rate, 1.0);
  EXPECT_FALSE(c.mistuned);
  EXPECT_EQ(c.trace.size(), 5500u);
}

TEST_F(PosteriorTest, SummaryLevelsNest) {
  const auto wide = posterior_summary(*chain_, 0.95);
  const auto narrow = posterior_summary(*chain_, 0.5);
  EXPECT_EQ(wide.interval.method, IntervalMethod::credible);
  EXPECT_LT(wide.interval.lower, narrow.interval.lower);
  EXPECT_GT(wide.interval.upper, narrow.interval.upper);
  EXPECT_TRUE(wide.interval.contains(wide.median_sigma));
}

TEST_F(PosteriorTest, ModeMatchesJointMle) {
  const auto s = posterior_summary(*chain_, 0.95);
  JointConfig jc;
  jc.pool_size = 200000;
  const auto mle = mle_joint(datasets::lyme(), 31, jc);
  ASSERT_TRUE(mle.converged());
  // The theta profile is nearly flat, so the pools' MC noise moves theta.
  EXPECT_NEAR(s.mode_theta, *mle.theta_hat, 1.5);
  EXPECT_NEAR(s.mode_sigma, mle.sigma_hat, 5.0);
}

TEST(Posterior, FixedTheta) {
  PosteriorConfig pc;
  pc.pool_size = 20000;
  pc.fixed_theta = 6.5;
  pc.burn_in = 200;
  const auto c = posterior_sample(datasets::kir(), PriorBounds{}, 2000, 3, pc);
  for (const auto& d : c.draws) EXPECT_EQ(d.first, 6.5);
  const auto s = posterior_summary(c, 0.95);
  EXPECT_EQ(s.mode_theta, 6.5);
  EXPECT_GT(s.mode_sigma, 0.0);
}

TEST(Posterior, SymmetricChainGivesSymmetricInterval) {
  PosteriorChain c;
  for (int i = -1000; i <= 1000; ++i) c.draws.emplace_back(1.0, 50.0 + i * 0.1);
  const auto s = posterior_summary(c, 0.9);
  EXPECT_NEAR(50.0 - s.interval.lower, s.interval.upper - 50.0, 1e-9);
}

TEST(Posterior, Validation) {
  PosteriorConfig pc;
  pc.pool_size = 2000;
  const auto x = datasets::lyme();
  EXPECT_THROW(posterior_sample(x, PriorBounds{0, 50, 10, -10}, 1000, 1, pc), InvalidInput);
  EXPECT_THROW(posterior_sample(x, PriorBounds{0, std::numeric_limits<double>::infinity(), 0, 10},
                                1000, 1, pc),
               InvalidInput);
  pc.fixed_theta = 80.0;
  EXPECT_THROW(posterior_sample(x, PriorBounds{}, 1000, 1, pc), InvalidInput);
  PosteriorChain tiny;
  tiny.draws.assign(10, {1.0, 1.0});
  EXPECT_THROW(posterior_summary(tiny, 0.95), InvalidInput);
}
