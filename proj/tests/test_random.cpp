#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "wfsel/core.hpp"
#include "wfsel/parallel.hpp"
#include "wfsel/random.hpp"

using namespace wfsel;

TEST(Stream, DeterministicAndDistinct) {
  Stream a(42), b(42), c(43);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a(), b());
  EXPECT_NE(Stream(42)(), c());
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
}

TEST(Stream, UniformOpenInterval) {
  Stream s(7);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = s.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000.0, 0.5, 0.005);
}

TEST(Dirichlet, MeanHomozygosityMatchesClosedForm) {
  // For a symmetric Dirichlet with total theta, E H = (theta + k) / (k (theta + 1)).
  // theta = 5, k = 20: 25 / 120.
  const std::size_t k = 20, n = 40000;
  std::vector<double> alpha(k, 0.25), x(k);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dirichlet_draw(derive_seed(5, 1, i), alpha, x);
    const double h = sum_of_squares(x);
    sum += h;
    sum2 += h * h;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  EXPECT_NEAR(mean, 25.0 / 120.0, 4.0 * se);
}

TEST(Dirichlet, CoordinateMeans) {
  std::vector<double> alpha{1.0, 2.0, 3.0}, x(3), acc(3, 0.0);
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    dirichlet_draw(derive_seed(9, 0, i), alpha, x);
    for (int j = 0; j < 3; ++j) acc[j] += x[j];
  }
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(acc[j] / n, alpha[j] / 6.0, 0.005);
}

TEST(Dirichlet, TinyShapesStayInterior) {
  std::vector<double> alpha(5, 1e-3), x(5);
  for (int i = 0; i < 1000; ++i) {
    dirichlet_draw(derive_seed(3, 0, i), alpha, x);
    for (double v : x) ASSERT_GT(v, 0.0);
  }
}

TEST(Parallel, ResultsIndependentOfWorkerCount) {
  auto run = [](unsigned threads) {
    std::vector<double> out(1000);
    parallel_for(out.size(), threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) out[i] = Stream(11, i).uniform();
    });
    return out;
  };
  EXPECT_EQ(run(1), run(4));
}

TEST(Parallel, PropagatesExceptions) {
  EXPECT_THROW(parallel_for(100, 4,
                            [](std::size_t b, std::size_t) {
                              if (b > 0) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}
