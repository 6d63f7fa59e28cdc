#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "wfsel/composition.hpp"

using namespace wfsel;

TEST(Projection, OntoSimplex) {
  const auto p = project_to_simplex(std::vector<double>{0.5, 0.5, 0.5});
  for (double v : p) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  const auto q = project_to_simplex(std::vector<double>{2.0, 0.0, -1.0});
  EXPECT_NEAR(q[0], 1.0, 1e-15);
  EXPECT_EQ(q[1], 0.0);
  EXPECT_EQ(q[2], 0.0);
  const auto r = project_to_simplex(std::vector<double>{0.2, 0.3, 0.5});
  EXPECT_NEAR(r[1], 0.3, 1e-15);
}

TEST(Composition, CentroidForHeterozygoteAdvantage) {
  for (std::size_t k : {2u, 4u, 8u, 20u}) {
    const auto r = optimal_composition(SelectionModel::symmetric(35.0), k);
    for (double v : r.point) EXPECT_NEAR(v, 1.0 / k, 1e-6);
    EXPECT_FALSE(r.boundary);
    EXPECT_NEAR(r.value, 35.0 / k, 1e-9);
  }
}

TEST(Composition, VertexForHomozygoteAdvantage) {
  const auto r = optimal_composition(SelectionModel::symmetric(-10.0), 5);
  EXPECT_TRUE(r.boundary);
  EXPECT_NEAR(*std::max_element(r.point.begin(), r.point.end()), 1.0, 1e-9);
  EXPECT_NEAR(r.value, -10.0, 1e-9);
}

TEST(Composition, OffDiagonalMatrixByGridSearch) {
  // x' [[0,1],[1,0]] x = 2 x1 x2 is minimized (at 0) on the vertices.
  const auto m = SelectionModel::general(SelectionMatrix(2, {0.0, 1.0, 1.0, 0.0}));
  const auto r = optimal_composition(m, 2);
  double best = 1e9;
  for (int i = 0; i <= 1000; ++i) {
    const double x = i / 1000.0;
    best = std::min(best, 2.0 * x * (1 - x));
  }
  EXPECT_NEAR(r.value, best, 1e-9);
  EXPECT_TRUE(r.boundary);
}

TEST(Composition, RandomMatrixAgainstGrid) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> e(9);
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) e[i * 3 + j] = e[j * 3 + i] = nd(rng);
    const auto model = SelectionModel::general(SelectionMatrix(3, e));
    const auto r = optimal_composition(model, 3);
    double best = 1e9;
    const int n = 400;
    for (int a = 0; a <= n; ++a) {
      for (int b = 0; b <= n - a; ++b) {
        const double x[3] = {double(a) / n, double(b) / n, double(n - a - b) / n};
        best = std::min(best, quadratic_form(std::span<const double>(x, 3), model));
      }
    }
    EXPECT_LE(r.value, best + 1e-9) << "trial " << trial;
    EXPECT_GE(r.value, best - 0.05) << "trial " << trial;
    EXPECT_NEAR(std::accumulate(r.point.begin(), r.point.end(), 0.0), 1.0, 1e-12);
  }
}

TEST(Composition, RejectsBadInput) {
  EXPECT_THROW(optimal_composition(SelectionModel::symmetric(1.0), 1), InvalidInput);
}
