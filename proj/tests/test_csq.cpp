#include <cmath>

#include <gtest/gtest.h>

#include "anisim/csq.hpp"

using namespace anisim;
using Eigen::VectorXd;

namespace {

double brute_force_max_corr(const CovarianceSpec& q, std::int64_t p, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<VectorXd> u;
  for (std::int64_t i = 0; i < p; ++i) {
    const VectorXd v = q.apply_q_sqrt(rng.normal_vector(q.dim()));
    u.push_back(v / v.norm());
  }
  double best = 0.0;
  for (std::int64_t i = 0; i < p; ++i) {
    for (std::int64_t j = i + 1; j < p; ++j) best = std::max(best, std::abs(u[i].dot(u[j])));
  }
  return best;
}

}  // namespace

TEST(Csq, VIsotropic) {
  EXPECT_NEAR(csq_v(CovarianceSpec::identity(400)), 0.05, 1e-15);
}

TEST(Csq, VSpiked) {
  const Eigen::Index d = 100;
  const double kappa = 50.0;
  const auto q = CovarianceSpec::spiked(d, kappa, VectorXd::Unit(d, 0));
  const double ratio = q.frobenius() / q.trace();
  EXPECT_GT(ratio, 0.1);
  EXPECT_DOUBLE_EQ(csq_v(q), 0.1);
  VectorXd spectrum = VectorXd::Ones(d);
  spectrum.head(50).setConstant(4.0);
  const auto diag = CovarianceSpec::diagonal(spectrum);
  EXPECT_DOUBLE_EQ(csq_v(diag), std::min(diag.frobenius() / diag.trace(), 0.1));
}

TEST(Csq, EpsilonBound) {
  const auto q = CovarianceSpec::identity(10'000);
  const auto b = epsilon_bound(q, 1e6, 2);
  ASSERT_TRUE(b.applicable);
  EXPECT_NEAR(b.v, 0.01, 1e-15);
  EXPECT_NEAR(b.log_argument, 1e4, 1e-9);
  EXPECT_NEAR(b.epsilon, 0.01 * std::sqrt(std::log(1e4)), 1e-14);
  EXPECT_TRUE(b.regime_ok);
  const auto na = epsilon_bound(q, 50.0, 2);
  EXPECT_FALSE(na.applicable);
  EXPECT_TRUE(std::isnan(na.epsilon));
  EXPECT_THROW(epsilon_bound(q, 10.0, 0), std::invalid_argument);
  EXPECT_THROW(epsilon_bound(q, 0.0, 2), std::invalid_argument);
}

TEST(Csq, Tolerance) {
  EXPECT_DOUBLE_EQ(csq_tolerance(0.01, 2), 0.01);
  EXPECT_DOUBLE_EQ(csq_tolerance(0.01, 4), 1e-4);
  EXPECT_NEAR(csq_tolerance(0.25, 1), 0.5, 1e-15);
  EXPECT_THROW(csq_tolerance(0.0, 2), std::invalid_argument);
  EXPECT_THROW(csq_tolerance(1.5, 2), std::invalid_argument);
}

TEST(Csq, SampleComplexity) {
  const auto q = CovarianceSpec::identity(1000);
  const auto s = sample_complexity_heuristic(q, 4, 1e8);
  EXPECT_NEAR(s.n_tau_sq, 1.0 / s.tau_sq, 1e-9 * s.n_tau_sq);
  EXPECT_NEAR(s.n_tau_fourth, s.n_tau_sq * s.n_tau_sq, 1e-9 * s.n_tau_fourth);
  const double d = 1000.0;
  EXPECT_NEAR(s.displayed, std::log(d) * std::log(d) * d / d, 1e-9);
  EXPECT_THROW(sample_complexity_heuristic(q, 2, 2.0), std::domain_error);
}

TEST(Csq, BlockedScanMatchesBruteForce) {
  Rng theta(1);
  for (const auto& q : {CovarianceSpec::identity(40), CovarianceSpec::spiked(40, 8.0, theta.normal_vector(40))}) {
    for (std::int64_t p : {2, 37, 300, 600}) {
      Rng rng(55);
      const auto r = build_family(q, p, rng);
      EXPECT_DOUBLE_EQ(r.max_pairwise_q_corr, brute_force_max_corr(q, p, 55)) << p;
      EXPECT_EQ(r.family_size, p);
      EXPECT_EQ(r.dim, 40);
    }
  }
}

TEST(Csq, WorkerCountDoesNotChangeResult) {
  const auto q = CovarianceSpec::identity(64);
  Rng a(9);
  Rng b(9);
  const auto one = build_family(q, 700, a, 1);
  const auto three = build_family(q, 700, b, 3);
  EXPECT_EQ(one.max_pairwise_q_corr, three.max_pairwise_q_corr);
  EXPECT_EQ(one.min_q_norm_sq, three.min_q_norm_sq);
}

TEST(Csq, ReportFields) {
  const auto q = CovarianceSpec::identity(2000);
  Rng rng(10);
  const std::int64_t p = 400;
  const auto r = build_family(q, p, rng);
  EXPECT_NEAR(r.v, 1.0 / std::sqrt(2000.0), 1e-15);
  EXPECT_NEAR(r.multiplier, r.max_pairwise_q_corr / (r.v * std::sqrt(std::log(400.0))), 1e-12);
  EXPECT_NEAR(r.epsilon_bound, epsilon_bound(q, 400.0 * 400.0, 2).epsilon, 1e-15);
  // chi-square with 2000 degrees of freedom stays well above half its mean.
  EXPECT_GT(r.min_q_norm_sq, 1000.0);
  // Max of p^2/2 near-Gaussian correlations with scale 1/sqrt(d).
  EXPECT_GT(r.max_pairwise_q_corr, 0.0);
  EXPECT_LT(r.max_pairwise_q_corr, 3.0 * r.v * std::sqrt(std::log(static_cast<double>(p) * p)));
}

TEST(Csq, RejectsTinyFamily) {
  Rng rng(1);
  EXPECT_THROW(build_family(CovarianceSpec::identity(5), 1, rng), std::invalid_argument);
}
