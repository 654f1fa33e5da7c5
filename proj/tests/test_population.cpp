#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "anisim/mc_oracle.hpp"
#include "anisim/population.hpp"

using namespace anisim;

namespace {
const double kPhi0 = 1.0 / std::sqrt(2.0 * std::numbers::pi);
}

TEST(Population, LinearRecursion) {
  const auto r = population_recursion(0.1, 0.01, 1, 200, 0.505);
  ASSERT_EQ(r.trajectory.size(), 201u);
  EXPECT_NEAR(r.trajectory[50], 0.6, 1e-12);
  EXPECT_EQ(r.trajectory.back(), 1.0);
  ASSERT_TRUE(r.hit_time.has_value());
  EXPECT_EQ(*r.hit_time, 41);
}

TEST(Population, GeometricRecursion) {
  const double eta = 0.01;
  const auto r = population_recursion(0.01, eta, 2, 500, 0.5);
  for (int t : {0, 17, 250, 450}) EXPECT_NEAR(r.trajectory[t], std::min(1.0, 0.01 * std::pow(1.0 + eta, t)), 1e-12);
  ASSERT_TRUE(r.hit_time.has_value());
  EXPECT_EQ(*r.hit_time, static_cast<std::int64_t>(std::ceil(std::log(50.0) / std::log1p(eta))));
}

TEST(Population, MonotoneAndClipped) {
  for (int k : {1, 2, 3, 4}) {
    const auto r = population_recursion(0.2, 0.05, k, 5000, 0.9);
    for (std::size_t t = 1; t < r.trajectory.size(); ++t) {
      EXPECT_GE(r.trajectory[t], r.trajectory[t - 1]);
      EXPECT_LE(r.trajectory[t], 1.0);
    }
  }
  const auto none = population_recursion(0.2, 0.0, 2, 100, 0.5);
  EXPECT_FALSE(none.hit_time.has_value());
  EXPECT_EQ(none.trajectory.back(), 0.2);
}

TEST(Population, OdeEstimateTracksRecursion) {
  for (int k : {1, 2, 3, 4}) {
    const double m0 = 0.05;
    const double eta = 1e-4;
    const double est = escape_time_estimate(m0, eta, k, 0.5);
    const auto r = population_recursion(m0, eta, k, static_cast<std::int64_t>(2 * est) + 10, 0.5);
    ASSERT_TRUE(r.hit_time.has_value()) << k;
    EXPECT_LE(std::abs(*r.hit_time - est) / est, 0.01) << "k=" << k;
  }
  EXPECT_NEAR(escape_time_estimate(0.1, 0.01, 3, 0.5), (10.0 - 2.0) / 0.01, 1e-9);
}

TEST(Population, RejectsBadArguments) {
  EXPECT_THROW(population_recursion(0.0, 0.1, 2, 10, 0.5), std::invalid_argument);
  EXPECT_THROW(population_recursion(0.6, 0.1, 2, 10, 0.5), std::invalid_argument);
  EXPECT_THROW(population_recursion(0.1, 0.1, 0, 10, 0.5), std::invalid_argument);
  EXPECT_THROW(escape_time_estimate(0.1, 0.0, 2, 0.5), std::invalid_argument);
  EXPECT_THROW(eta_tilde_for(LinkFunction::hermite(2), 0.1, 1.0, 0.0), std::invalid_argument);
}

TEST(Population, EtaTilde) {
  EXPECT_NEAR(eta_tilde_for(LinkFunction::hermite(2), 1e-3, 0.5, 0.25), 1e-3 * 0.5 * std::sqrt(2.0) * kPhi0 / 0.25,
              1e-15);
  EXPECT_DOUBLE_EQ(eta_tilde_for(LinkFunction::hermite(3), 1e-3, 1.0, 1.0), 0.0);
  // Sign link: leading coefficient E[|z|]/2.
  EXPECT_NEAR(eta_tilde_for(LinkFunction::sign(), 1.0, 1.0, 1.0), 0.5 * std::sqrt(2.0 / std::numbers::pi), 1e-12);
}

TEST(Population, DriftMatchesSeries) {
  const auto link = LinkFunction::hermite(2);
  const auto p = make_population_params(link, 0.01, 0.7, 0.1);
  EXPECT_EQ(p.k_star, 2);
  for (double m : {0.05, 0.3, 0.9}) EXPECT_NEAR(population_drift(m, p), 0.7 * eval_series(p.drift_coeffs, m), 1e-14);
  EXPECT_THROW(population_drift(1.0, p), std::invalid_argument);
}

TEST(Population, DriftMatchesMonteCarlo) {
  const auto link = LinkFunction::sign(60);
  const auto p = make_population_params(link, 0.01, 1.0, 0.0);
  Rng rng(3);
  const double m = 0.45;
  const auto e = estimate(
      [&](std::span<const double> z) {
        const auto [zs, zt] = correlated_pair(z[0], z[1], m);
        return zt > 0.0 ? zs * link(zs) : 0.0;
      },
      2, 400'000, rng);
  EXPECT_TRUE(e.within(population_drift(m, p), 4.5)) << e.mean << " vs " << population_drift(m, p);
}

TEST(GaussInt, FirstIntegralMonteCarlo) {
  Rng rng(4);
  for (double p : {0.0, 0.3, 0.8}) {
    for (double x : {-1.2, 0.5, 2.0}) {
      const double s = std::sqrt(1.0 - p * p);
      const auto e = estimate([&](std::span<const double> y) { return p * x + s * y[0] > 0.0 ? y[0] : 0.0; }, 1,
                              300'000, rng);
      EXPECT_TRUE(e.within(gauss_int1(p, x), 4.5)) << p << ',' << x << ": " << e.mean << " vs " << gauss_int1(p, x);
    }
  }
  EXPECT_DOUBLE_EQ(gauss_int1(0.0, 3.0), kPhi0);
  EXPECT_THROW(gauss_int1(1.0, 0.0), std::invalid_argument);
}

TEST(GaussInt, SecondIntegralMonteCarlo) {
  Rng rng(5);
  const HermiteCoeffs a({0.0, 0.2, 0.7, 0.0, -0.4});
  for (double c : {0.0, 0.25, 2.0}) {
    const auto e = estimate([&](std::span<const double> x) { return a.evaluate(x[0]) * std::exp(-c * x[0] * x[0]); }, 1,
                            300'000, rng);
    EXPECT_TRUE(e.within(gauss_int2(a, c), 4.5)) << c << ": " << e.mean << " vs " << gauss_int2(a, c);
  }
  EXPECT_NEAR(gauss_int2(HermiteCoeffs({1.0}), 1.5), 0.5, 1e-14);
  EXPECT_THROW(gauss_int2(a, -0.1), std::invalid_argument);
}

TEST(GaussInt, G2MagnitudeMonteCarlo) {
  Rng rng(6);
  const double qt = 0.7;
  for (const auto& link : {LinkFunction::hermite(2), LinkFunction::hermite(4)}) {
    for (double m : {0.2, 0.6}) {
      const double s = std::sqrt(1.0 - m * m);
      const double r = std::sqrt(1.0 - qt * qt);
      const auto e = estimate(
          [&](std::span<const double> z) {
            const double zt = m * z[0] + s * z[1];
            const double u = qt * z[1] + r * z[2];
            return zt > 0.0 ? link(z[0]) * u : 0.0;
          },
          3, 400'000, rng);
      const double closed = g2_magnitude(m, qt, link);
      EXPECT_TRUE(e.within(closed, 4.5)) << link.describe() << " m=" << m << ": " << e.mean << " vs " << closed;
    }
  }
}

TEST(GaussInt, G2VanishesForOddLinksAndZeroOverlap) {
  EXPECT_DOUBLE_EQ(g2_magnitude(0.4, 0.9, LinkFunction::hermite(3)), 0.0);
  // At m = 0 the gate is independent of z*, and E f = 0.
  EXPECT_NEAR(g2_magnitude(0.0, 0.9, LinkFunction::hermite(2)), 0.0, 1e-15);
  EXPECT_THROW(g2_magnitude(1.0, 0.5, LinkFunction::hermite(2)), std::invalid_argument);
}
