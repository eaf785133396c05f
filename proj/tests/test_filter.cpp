#include <gtest/gtest.h>

#include <random>

#include "uwbinit/error.hpp"
#include "uwbinit/filter.hpp"

using namespace uwbinit;

namespace {

SyncedSample s(double t, double x, double d) { return {t, Vec3(x, 0, 0), d}; }

}  // namespace

TEST(Filter, CheckExamples) {
  const FilterConfig cfg{0.1};
  EXPECT_TRUE(check(s(0, 0, 5.0), s(1, 1, 5.5), cfg));
  EXPECT_FALSE(check(s(0, 0, 5.0), s(1, 1, 6.5), cfg));
  EXPECT_TRUE(check(s(0, 0, 5.0), s(1, 0, 5.0 + 0.125), FilterConfig{0.125}));  // boundary, exact in binary
  EXPECT_FALSE(check(s(0, 0, 5.0), s(1, 0, 5.0 + 0.1250001), FilterConfig{0.125}));
}

TEST(Filter, CheckRejectsNonIncreasingTime) {
  EXPECT_THROW(check(s(1, 0, 5), s(1, 0, 5), FilterConfig{}), Error);
}

TEST(Filter, ComparesAgainstLastAccepted) {
  const FilterConfig cfg{0.1};
  FilterState st;
  EXPECT_TRUE(ingest(st, s(0, 0, 5.0), cfg));
  EXPECT_FALSE(ingest(st, s(1, 0.1, 8.0), cfg));  // +3 m
  EXPECT_TRUE(ingest(st, s(2, 0.2, 5.2), cfg));   // vs first: 0.2 <= 0.2 + 0.1
  EXPECT_EQ(st.accepted, 2u);
  EXPECT_EQ(st.rejected, 1u);
  EXPECT_EQ(st.total(), 3u);
  EXPECT_DOUBLE_EQ(st.last_accepted->range, 5.2);
  EXPECT_DOUBLE_EQ(st.max_gap, 2.0);
}

TEST(Filter, FirstSampleAccepted) {
  FilterState st;
  EXPECT_TRUE(ingest(st, s(0, 0, 100.0), FilterConfig{0.0}));
  EXPECT_EQ(st.accepted, 1u);
  EXPECT_EQ(st.rejected, 0u);
}

TEST(Filter, OutOfOrderIngest) {
  FilterState st;
  ingest(st, s(1, 0, 1), FilterConfig{});
  EXPECT_THROW(ingest(st, s(1, 0, 1), FilterConfig{}), Error);
  EXPECT_THROW(ingest(st, s(0.5, 0, 1), FilterConfig{}), Error);
}

TEST(Filter, NoiselessNeverRejected) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-3, 3);
  const Vec3 a(1, 2, 0.5);
  FilterState st;
  Vec3 p = Vec3::Zero();
  for (int k = 0; k < 2000; ++k) {
    p += Vec3(u(rng), u(rng), u(rng));
    EXPECT_TRUE(ingest(st, SyncedSample{double(k), p, (p - a).norm()}, FilterConfig{0.0}));
  }
}

// Oracle: the same rule simulated independently over 2e6 draws gives 0.1575.
TEST(Filter, StaticGaussianRejectionRate) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 0.05);
  FilterState st;
  for (int k = 0; k < 10000; ++k) ingest(st, SyncedSample{double(k), Vec3(1, 0, 0), 3.0 + n(rng)}, FilterConfig{0.1});
  const double rate = double(st.rejected) / double(st.total());
  EXPECT_NEAR(rate, 0.1575, 0.02);
}

TEST(Filter, TauFromSigma) {
  EXPECT_DOUBLE_EQ(FilterConfig::from_sigma(0.05).tau, 0.1);
  EXPECT_DOUBLE_EQ(FilterConfig::from_sigma(std::nullopt).tau, 0.1);
  EXPECT_DOUBLE_EQ(FilterConfig::from_sigma(0.5).tau, 1.0);
}

TEST(Filter, FloatStream) {
  FilterStateT<float> st;
  const FilterConfig cfg{0.1};
  EXPECT_TRUE(ingest(st, SyncedSamplef{0.f, Vector3<float>(0, 0, 0), 5.f}, cfg));
  EXPECT_FALSE(ingest(st, SyncedSamplef{1.f, Vector3<float>(1, 0, 0), 6.5f}, cfg));
}
