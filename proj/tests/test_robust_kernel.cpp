#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "uwbinit/error.hpp"
#include "uwbinit/robust_kernel.hpp"
#include "uwbinit/solver.hpp"

using namespace uwbinit;

namespace {

double rho(double r, double a, double c) { return barron_loss(r, RobustKernel{a, c}); }
double psi(double r, double a, double c) { return r * barron_weight(r, RobustKernel{a, c}); }

}  // namespace

TEST(BarronLoss, SpotValues) {
  for (double a : {-10.0, -3.0, 0.0, 0.5, 1.0, 2.0}) EXPECT_EQ(rho(0.0, a, 0.7), 0.0);
  EXPECT_NEAR(rho(1.0, 1.0, 1.0), std::sqrt(2.0) - 1.0, 1e-12);
  EXPECT_NEAR(rho(2.0 * 0.3, 2.0, 0.3), 2.0, 1e-12);
  EXPECT_NEAR(rho(0.4, 0.0, 0.4), std::log(1.5), 1e-12);
  EXPECT_NEAR(rho(2.0, -10.0, 0.3), 1.0 - std::exp(-0.5 * (2.0 / 0.3) * (2.0 / 0.3)), 1e-15);
}

// 30-digit reference values of the closed form.
TEST(BarronLoss, HighPrecisionReference) {
  EXPECT_NEAR(rho(0.7, -3.0, 0.5), 0.65184461263647868746, 1e-14);
  EXPECT_NEAR(rho(3.0, 1.5, 1.0), 2.7001662944759727959, 1e-14);
  EXPECT_NEAR(rho(0.25, -1.0, 0.1), 1.2915156076455017443, 1e-14);
  EXPECT_NEAR(rho(5.0, 1.0, 2.0), 1.6925824035672520156, 1e-14);
  EXPECT_NEAR(rho(1.2, -7.5, 0.3), 1.2354346386836061121, 1e-14);
}

TEST(BarronWeight, Branches) {
  for (double r : {0.0, 0.3, 5.0, 100.0}) EXPECT_DOUBLE_EQ(barron_weight(r, RobustKernel{2.0, 0.5}), 4.0);
  EXPECT_DOUBLE_EQ(barron_weight(0.0, RobustKernel{0.0, 1.0}), 1.0);
  EXPECT_DOUBLE_EQ(barron_weight(1.5, RobustKernel{0.0, 0.5}), 2.0 / (2.25 + 0.5));
}

TEST(BarronWeight, MatchesFiniteDifferences) {
  const double c = 0.4;
  for (double a : {-8.0, -4.0, -2.0, 0.0, 1.0, 2.0}) {
    for (int k = 1; k <= 50; ++k) {
      const double r = 0.1 * k * c;
      const double h = 1e-5 * c;
      const double fd = (rho(r + h, a, c) - rho(r - h, a, c)) / (2 * h);
      EXPECT_NEAR(psi(r, a, c), fd, 1e-6 * std::abs(fd)) << "alpha " << a << " r " << r;
    }
  }
}

// Near alpha = 2 the gap grows like (x eps / 4)(ln(x / eps) - 1), x = (r/c)^2;
// at r = 10c with eps = 1e-6 that is 4.4e-4, so the 1e-4 band only holds up to ~4.9c.
TEST(BarronLoss, ContinuityNearTwo) {
  const double c = 0.3;
  const double eps = 1e-6;
  for (int k = 0; k <= 400; ++k) {
    const double r = 0.01 * k * c;
    EXPECT_LT(std::abs(rho(r, 2.0 - eps, c) - rho(r, 2.0, c)), 1e-4) << r;
  }
  const double x = 100.0;
  const double predicted = 0.25 * x * eps * (std::log(x / eps) - 1.0);
  const double gap = std::abs(rho(10 * c, 2.0 - eps, c) - rho(10 * c, 2.0, c));
  EXPECT_GT(gap, 1e-4);
  EXPECT_NEAR(gap, predicted, 0.1 * predicted);
}

TEST(BarronLoss, ContinuityNearZeroAndTwoOverTenC) {
  const double c = 0.3;
  for (double centre : {0.0, 2.0}) {
    for (double off : {-1e-8, 1e-8}) {
      if (centre + off > 2.0) continue;
      for (int k = 0; k <= 100; ++k) {
        const double r = 0.1 * k * c;
        EXPECT_LT(std::abs(rho(r, centre + off, c) - rho(r, centre, c)), 1e-4);
      }
    }
  }
}

TEST(BarronLoss, MonotoneInAlpha) {
  const double c = 0.5;
  const std::vector<double> alphas = {-10, -6, -2, -1, -0.5, 0, 0.5, 1, 1.5, 1.9, 2};
  for (int k = 0; k <= 60; ++k) {
    const double r = 0.1 * k;
    for (std::size_t i = 1; i < alphas.size(); ++i) {
      EXPECT_LE(rho(r, alphas[i - 1], c), rho(r, alphas[i], c) + 1e-15);
    }
  }
}

TEST(BarronWeight, NonIncreasingInResidual) {
  for (double a : {-10.0, -3.0, 0.0, 1.0, 1.9}) {
    double prev = barron_weight(0.0, RobustKernel{a, 0.2});
    for (int k = 1; k <= 200; ++k) {
      const double w = barron_weight(0.02 * k, RobustKernel{a, 0.2});
      EXPECT_LE(w, prev);
      prev = w;
    }
  }
}

TEST(LogPartition, QuadratureReference) {
  EXPECT_NEAR(log_partition(2.0, 10.0), 0.91893853320467274178, 1e-10);
  EXPECT_NEAR(log_partition(0.0, 10.0), 1.3976096152322429098, 1e-10);
  EXPECT_NEAR(log_partition(1.0, 10.0), 1.1854231707935391942, 1e-10);
  EXPECT_NEAR(log_partition(-2.0, 10.0), 1.7457888567343884261, 1e-10);
  EXPECT_NEAR(log_partition(-10.0, 10.0), 2.1653591123321403856, 1e-10);
}

TEST(LogPartition, IncreasesAsAlphaDecreases) {
  double prev = log_partition(2.0, 10.0);
  for (double a = 1.9; a >= -10.0; a -= 0.1) {
    const double z = log_partition(a, 10.0);
    EXPECT_GT(z, prev) << a;
    prev = z;
  }
}

TEST(AdaptAlpha, GaussianFavoursQuadratic) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 0.2);
  std::vector<double> r(1000);
  for (auto& x : r) x = n(rng);
  const double a = adapt_alpha(r, 0.2, SolverConfig{});
  EXPECT_GE(a, 1.5);
  EXPECT_LE(a, 2.0);
}

TEST(AdaptAlpha, HeavyTailsGoBelowZero) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 0.2);
  std::vector<double> r(1000);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = i % 5 == 0 ? (i % 10 == 0 ? 2.0 : -2.0) : n(rng);
  EXPECT_LT(adapt_alpha(r, 0.2, SolverConfig{}), 0.0);
}

TEST(AdaptAlpha, ZeroResidualsGiveTwo) {
  const std::vector<double> r(50, 0.0);
  EXPECT_DOUBLE_EQ(adapt_alpha(r, 0.1, SolverConfig{}), 2.0);
}

TEST(AdaptAlpha, Preconditions) {
  const std::vector<double> r(9, 0.1);
  EXPECT_THROW(adapt_alpha(r, 0.1, SolverConfig{}), Error);
  const std::vector<double> r2(20, 0.1);
  EXPECT_THROW(adapt_alpha(r2, 0.0, SolverConfig{}), Error);
}

TEST(BarronLoss, FloatAgreesWithDouble) {
  for (double a : {-4.0, 0.0, 1.0, 2.0}) {
    const float f = barron_loss(0.37f, RobustKernel{a, 0.2});
    EXPECT_NEAR(f, rho(0.37, a, 0.2), 1e-5);
  }
}
