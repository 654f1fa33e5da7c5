#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "anisim/mc_oracle.hpp"

using namespace anisim;

TEST(McOracle, SecondAndFourthMoments) {
  Rng rng(1);
  const auto e2 = estimate([](std::span<const double> z) { return z[0] * z[0]; }, 1, 200'000, rng);
  EXPECT_TRUE(e2.within(1.0, 4.0));
  EXPECT_NEAR(e2.std_error, std::sqrt(2.0 / 200'000), 2e-4);
  EXPECT_EQ(e2.n_samples, 200'000);
  const auto e4 = estimate([](std::span<const double> z) { return std::pow(z[0], 4); }, 1, 200'000, rng);
  EXPECT_TRUE(e4.within(3.0, 4.0));
}

TEST(McOracle, IndependentCoordinates) {
  Rng rng(2);
  const auto e = estimate([](std::span<const double> z) { return z[0] * z[1] * z[2]; }, 3, 100'000, rng);
  EXPECT_TRUE(e.within(0.0, 4.0));
}

TEST(McOracle, ConstantHasZeroError) {
  Rng rng(3);
  const auto e = estimate([](std::span<const double>) { return 2.5; }, 1, 10, rng);
  EXPECT_DOUBLE_EQ(e.mean, 2.5);
  EXPECT_DOUBLE_EQ(e.std_error, 0.0);
  EXPECT_DOUBLE_EQ(e.z_score(2.5), 0.0);
  EXPECT_TRUE(std::isinf(e.z_score(2.0)));
}

TEST(McOracle, CorrelatedPair) {
  Rng rng(4);
  const double rho = -0.35;
  const auto e = estimate(
      [&](std::span<const double> z) {
        const auto [a, b] = correlated_pair(z[0], z[1], rho);
        return a * b;
      },
      2, 200'000, rng);
  EXPECT_TRUE(e.within(rho, 4.0));
  const auto v = estimate(
      [&](std::span<const double> z) {
        const auto [a, b] = correlated_pair(z[0], z[1], rho);
        (void)a;
        return b * b;
      },
      2, 200'000, rng);
  EXPECT_TRUE(v.within(1.0, 4.0));
  const auto [a, b] = correlated_pair(0.7, 0.2, 1.0);
  EXPECT_DOUBLE_EQ(a, b);
}

TEST(McOracle, ShardedIndependentOfWorkerCount) {
  auto g = [](std::span<const double> z) { return std::exp(0.3 * z[0]) * z[1]; };
  const auto one = estimate_sharded(g, 2, 50'001, 77, 7, 1);
  const auto four = estimate_sharded(g, 2, 50'001, 77, 7, 4);
  EXPECT_EQ(one.mean, four.mean);
  EXPECT_EQ(one.std_error, four.std_error);
  EXPECT_EQ(one.n_samples, 50'001);
}

TEST(McOracle, SingleShardMatchesPlainEstimate) {
  auto g = [](std::span<const double> z) { return z[0] * z[0] + z[0]; };
  Rng rng(derive_seeds(5, 1)[0]);
  const auto plain = estimate(g, 1, 1000, rng);
  const auto sharded = estimate_sharded(g, 1, 1000, 5, 1, 1);
  EXPECT_DOUBLE_EQ(plain.mean, sharded.mean);
  EXPECT_NEAR(plain.std_error, sharded.std_error, 1e-15);
}

TEST(McOracle, ShardMergeMatchesPooledMoments) {
  // Pooled mean of shard means weighted by size equals the merged mean.
  auto g = [](std::span<const double> z) { return z[0]; };
  const auto merged = estimate_sharded(g, 1, 999, 9, 3, 1);
  const auto seeds = derive_seeds(9, 3);
  double total = 0.0;
  for (std::uint64_t s : seeds) {
    Rng rng(s);
    for (int i = 0; i < 333; ++i) total += rng.normal();
  }
  EXPECT_NEAR(merged.mean, total / 999.0, 1e-13);
}

TEST(McOracle, RejectsBadInput) {
  Rng rng(6);
  auto g = [](std::span<const double> z) { return z[0]; };
  EXPECT_THROW(estimate(g, 1, 1, rng), std::invalid_argument);
  EXPECT_THROW(estimate(g, 0, 10, rng), std::invalid_argument);
  EXPECT_THROW(estimate_sharded(g, 1, 10, 1, 0), std::invalid_argument);
  EXPECT_THROW(estimate([](std::span<const double>) { return std::numeric_limits<double>::quiet_NaN(); }, 1, 10, rng),
               std::domain_error);
  EXPECT_THROW(estimate_sharded([](std::span<const double>) { return std::numeric_limits<double>::infinity(); }, 1, 10,
                                1, 2, 2),
               std::domain_error);
}
