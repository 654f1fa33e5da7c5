#include <cmath>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "anisim/trainers.hpp"

using namespace anisim;
using Eigen::VectorXd;

namespace {

SimInstance spiked_instance(Eigen::Index d, const LinkFunction& link) {
  Rng rng(100);
  return make_instance(CovarianceSpec::spiked(d, 4.0, rng.normal_vector(d)), rng.normal_vector(d), link);
}

// Straightforward replay of the trainer using the standalone step functions.
std::vector<double> reference_overlaps(const SimInstance& inst, const TrainerConfig& cfg) {
  Rng rng(cfg.seed);
  VectorXd w = init_weights(inst, cfg.init_scale_cr, rng);
  if (cfg.variant == Variant::SphericalQ) w /= inst.cov.q_norm(w);
  std::vector<double> out{overlap(inst, w)};
  double eta = cfg.eta0;
  const auto every = cfg.effective_record_every();
  for (std::int64_t t = 1; t <= cfg.steps; ++t) {
    const VectorXd x = inst.cov.apply_q_sqrt(rng.normal_vector(inst.cov.dim()));
    const double y = cfg.label_sign * inst.link(x.dot(inst.w_star) / inst.q_sqrt_w_star_norm);
    switch (cfg.variant) {
      case Variant::Vanilla:
      case Variant::AdaptiveLR: w = sgd_step(w, x, y, eta); break;
      case Variant::RepSGD: w = rep_sgd_step(w, x, y, eta, cfg.eta2); break;
      case Variant::SphericalQ: w = spherical_sgd_step(w, x, y, eta, inst.cov); break;
    }
    if (cfg.variant == Variant::AdaptiveLR) eta *= 1.0 + cfg.growth;
    if (t % every == 0 || t == cfg.steps) out.push_back(overlap(inst, w));
  }
  return out;
}

}  // namespace

TEST(Trainers, InitWeightsScale) {
  const auto inst = spiked_instance(50, LinkFunction::hermite(2));
  Rng rng(1);
  for (double cr : {1.0, 0.3, 0.01}) {
    const VectorXd w = init_weights(inst, cr, rng);
    EXPECT_NEAR(inst.cov.q_norm(w), cr * inst.q_sqrt_w_star_norm, 1e-12);
  }
  EXPECT_THROW(init_weights(inst, 0.0, rng), std::invalid_argument);
  EXPECT_THROW(init_weights(inst, 1.5, rng), std::invalid_argument);
}

TEST(Trainers, OverlapBounds) {
  const auto inst = spiked_instance(20, LinkFunction::hermite(2));
  EXPECT_NEAR(overlap(inst, inst.w_star), 1.0, 1e-12);
  EXPECT_NEAR(overlap(inst, -2.0 * inst.w_star), -1.0, 1e-12);
  EXPECT_THROW(overlap(inst, VectorXd::Zero(20)), std::domain_error);
  Rng rng(2);
  for (int i = 0; i < 50; ++i) EXPECT_LE(std::abs(overlap(inst, rng.normal_vector(20))), 1.0 + 1e-12);
}

TEST(Trainers, SgdStepGate) {
  const VectorXd w = (VectorXd(2) << 1.0, 0.0).finished();
  const VectorXd xp = (VectorXd(2) << 1.0, 2.0).finished();
  const VectorXd xn = (VectorXd(2) << -1.0, 2.0).finished();
  EXPECT_EQ(sgd_step(w, xp, 2.0, 0.5), (VectorXd(2) << 2.0, 2.0).finished());
  EXPECT_EQ(sgd_step(w, xn, 2.0, 0.5), w);
  EXPECT_THROW(sgd_step(w, VectorXd::Ones(3), 1.0, 1.0), std::invalid_argument);
}

TEST(Trainers, RepSgdSecondGate) {
  const VectorXd w = (VectorXd(2) << 1.0, 0.0).finished();
  const VectorXd x = (VectorXd(2) << 1.0, 0.0).finished();
  // First step flips the sign of w.x, so the second gate closes.
  EXPECT_EQ(rep_sgd_step(w, x, -1.0, 2.0, 0.1), w);
  EXPECT_EQ(rep_sgd_step(w, x, -1.0, 0.5, 0.1), (VectorXd(2) << 0.9, 0.0).finished());
  // A closed first gate leaves w.x unchanged.
  EXPECT_EQ(rep_sgd_step(w, -x, 1.0, 0.5, 0.1), w);
}

TEST(Trainers, SphericalStepKeepsUnitQNorm) {
  const auto inst = spiked_instance(30, LinkFunction::hermite(2));
  Rng rng(3);
  VectorXd w = rng.normal_vector(30);
  w /= inst.cov.q_norm(w);
  for (int i = 0; i < 200; ++i) {
    const VectorXd x = inst.cov.sample(rng);
    w = spherical_sgd_step(w, x, rng.normal(), 0.05, inst.cov);
    EXPECT_NEAR(inst.cov.q_norm(w), 1.0, 1e-12);
  }
  EXPECT_THROW(spherical_sgd_step(2.0 * w, w, 1.0, 0.1, inst.cov), std::invalid_argument);
}

TEST(Trainers, Theorem1Schedule) {
  const auto s1 = theorem1_schedule(1, 0.1, 0.5, 0.1);
  EXPECT_NEAR(s1.eta, 0.0025, 1e-15);
  EXPECT_EQ(s1.steps, 400);
  const auto s2 = theorem1_schedule(2, std::exp(-2.0), 1.0, 0.1);
  EXPECT_NEAR(s2.eta, 0.005, 1e-15);
  EXPECT_EQ(s2.steps, 400);
  const auto s3 = theorem1_schedule(3, 0.1, 1.0, 0.5);
  EXPECT_NEAR(s3.eta, 0.025, 1e-15);
  EXPECT_EQ(s3.steps, 400);
  EXPECT_EQ(theorem1_schedule(1, 0.5, 0.3, 0.7).steps, static_cast<std::int64_t>(std::ceil(1.0 / (0.49 * 0.09))));
  EXPECT_THROW(theorem1_schedule(2, 0.0, 1.0, 0.1), std::domain_error);
  EXPECT_THROW(theorem1_schedule(2, 1.0, 1.0, 0.1), std::invalid_argument);
  EXPECT_THROW(theorem1_schedule(0, 0.1, 1.0, 0.1), std::invalid_argument);
  EXPECT_THROW(theorem1_schedule(2, 0.1, 1.0, 1.0), std::invalid_argument);
}

TEST(Trainers, ConfigValidation) {
  TrainerConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.eta0 = 0.0;
  EXPECT_NO_THROW(cfg.validate());
  cfg.eta0 = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.steps = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.label_sign = 0.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.variant = Variant::AdaptiveLR;
  cfg.growth = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.steps = 10;
  EXPECT_EQ(cfg.effective_record_every(), 1);
  cfg.steps = 100'000;
  EXPECT_EQ(cfg.effective_record_every(), 50);
}

class TrackingVsReference : public ::testing::TestWithParam<Variant> {};

TEST_P(TrackingVsReference, IncrementalScalarsMatchNaiveLoop) {
  const auto inst = spiked_instance(60, LinkFunction::hermite(2));
  TrainerConfig cfg;
  cfg.variant = GetParam();
  cfg.eta0 = 2e-3;
  cfg.eta2 = 1e-3;
  cfg.growth = 1e-4;
  cfg.steps = 2500;
  cfg.record_every = 100;
  cfg.init_scale_cr = 0.2;
  cfg.seed = 31;
  const auto rec = run_trajectory(inst, cfg);
  const auto ref = reference_overlaps(inst, cfg);
  ASSERT_EQ(rec.m_t.size(), ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(rec.m_t[i], ref[i], 1e-9) << "t=" << rec.times[i];
  EXPECT_LE(rec.max_resync_drift, 1e-9);
  EXPECT_EQ(rec.times.back(), cfg.steps);
}

INSTANTIATE_TEST_SUITE_P(AllVariants, TrackingVsReference,
                         ::testing::Values(Variant::Vanilla, Variant::SphericalQ, Variant::AdaptiveLR, Variant::RepSGD),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Trainers, Deterministic) {
  const auto inst = spiked_instance(40, LinkFunction::hermite(2));
  TrainerConfig cfg;
  cfg.steps = 3000;
  cfg.seed = 7;
  const auto a = run_trajectory(inst, cfg);
  const auto b = run_trajectory(inst, cfg);
  EXPECT_EQ(a.m_t, b.m_t);
  EXPECT_EQ(a.q_norm_w, b.q_norm_w);
  cfg.seed = 8;
  EXPECT_NE(run_trajectory(inst, cfg).m_t, a.m_t);
}

TEST(Trainers, ZeroLearningRateLeavesWeights) {
  const auto inst = spiked_instance(40, LinkFunction::hermite(2));
  TrainerConfig cfg;
  cfg.eta0 = 0.0;
  cfg.steps = 500;
  const auto rec = run_trajectory(inst, cfg);
  for (double m : rec.m_t) EXPECT_DOUBLE_EQ(m, rec.m0);
  EXPECT_DOUBLE_EQ(rec.noise_budget, 0.0);
}

TEST(Trainers, RecordedDiagnostics) {
  const auto inst = spiked_instance(40, LinkFunction::hermite(2));
  TrainerConfig cfg;
  cfg.variant = Variant::AdaptiveLR;
  cfg.growth = 1e-3;
  cfg.steps = 1000;
  cfg.record_every = 250;
  const auto rec = run_trajectory(inst, cfg);
  EXPECT_EQ(rec.times, (std::vector<std::int64_t>{0, 250, 500, 750, 1000}));
  EXPECT_NEAR(rec.eta_t.back(), cfg.eta0 * std::pow(1.0 + cfg.growth, 1000), 1e-15);
  EXPECT_NEAR(rec.noise_budget, cfg.eta0 * std::sqrt(inst.cov.trace() * 1000.0), 1e-15);
  for (std::size_t i = 0; i < rec.times.size(); ++i) {
    EXPECT_GE(rec.w_perp_norm[i], 0.0);
    EXPECT_LE(std::abs(rec.m_t[i]), 1.0);
  }
}

TEST(Trainers, SphericalStaysOnSphere) {
  const auto inst = spiked_instance(40, LinkFunction::hermite(2));
  TrainerConfig cfg;
  cfg.variant = Variant::SphericalQ;
  cfg.eta0 = 0.05;
  cfg.steps = 3000;
  const auto rec = run_trajectory(inst, cfg);
  for (double n : rec.q_norm_w) EXPECT_NEAR(n, 1.0, 1e-12);
}

TEST(Trainers, BlowUpRaisesTrainingError) {
  const auto inst = spiked_instance(20, LinkFunction::hermite(6));
  TrainerConfig cfg;
  cfg.eta0 = 1e300;
  cfg.steps = 5000;
  try {
    run_trajectory(inst, cfg);
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_GE(e.step(), 1);
    EXPECT_LE(e.step(), cfg.steps);
  }
}

TEST(Trainers, EscapeRecordedOnceSignalDominates) {
  // Small d and a large step: the quadratic link escapes within a few thousand steps.
  Rng rng(4);
  const auto inst = make_instance(CovarianceSpec::identity(20), rng.normal_vector(20), LinkFunction::hermite(2));
  TrainerConfig cfg;
  cfg.eta0 = 2e-3;
  cfg.steps = 20'000;
  cfg.label_sign = -static_cast<double>(check_assumption_coeff(inst.link, 0.1, 200).sign);
  cfg.seed = 12;
  const auto rec = run_trajectory(inst, cfg);
  ASSERT_TRUE(rec.escape_time.has_value());
  EXPECT_TRUE(rec.symmetric_link);
  EXPECT_GE(rec.final_alignment(), 0.9);
  EXPECT_GE(rec.alignment(rec.m_t.back()), kEscapeThreshold);
}

TEST(Trainers, AlignmentUsesAbsoluteValueForSymmetricLinks) {
  TrajectoryRecord rec;
  rec.symmetric_link = true;
  rec.final_m = -0.8;
  EXPECT_DOUBLE_EQ(rec.final_alignment(), 0.8);
  rec.symmetric_link = false;
  EXPECT_DOUBLE_EQ(rec.final_alignment(), -0.8);
}

TEST(Trainers, CsvFormat) {
  TrajectoryRecord rec;
  rec.times = {0, 10};
  rec.m_t = {0.1234567890123, 0.5};
  rec.q_norm_w = {1.0, 2.0};
  rec.w_sig_norm = {0.0, -1.5};
  rec.w_perp_norm = {3.0, 4.0};
  rec.eta_t = {1e-4, 1e-4};
  std::ostringstream os;
  write_trajectory_csv(os, rec);
  EXPECT_EQ(os.str(),
            "t,m_t,q_norm_w,w_sig_norm,w_perp_norm,eta_t\n"
            "0,0.123456789,1,0,3,0.0001\n"
            "10,0.5,2,-1.5,4,0.0001\n");
  std::ostringstream extra;
  write_trajectory_csv_header(extra, {"seed"});
  write_trajectory_csv_rows(extra, rec, {"42"});
  EXPECT_EQ(extra.str().substr(0, extra.str().find('\n')), "t,m_t,q_norm_w,w_sig_norm,w_perp_norm,eta_t,seed");
  EXPECT_NE(extra.str().find("10,0.5,2,-1.5,4,0.0001,42\n"), std::string::npos);
}
