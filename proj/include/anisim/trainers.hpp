#pragma once

// Online SGD on a single ReLU neuron with correlation loss L = 1 - y relu(w.x).
// Four variants share one loop; diagnostics come from scalars maintained
// incrementally and resynchronized against full recomputation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "anisim/covariance.hpp"
#include "anisim/rng.hpp"
#include "anisim/sim_model.hpp"

namespace anisim {

enum class Variant { Vanilla, SphericalQ, AdaptiveLR, RepSGD };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::Vanilla: return "vanilla";
    case Variant::SphericalQ: return "spherical";
    case Variant::AdaptiveLR: return "adaptive";
    case Variant::RepSGD: return "repsgd";
  }
  return "unknown";
}

inline constexpr std::int64_t kResyncEvery = 1000;
inline constexpr double kEscapeThreshold = 0.5;

struct TrainerConfig {
  Variant variant = Variant::Vanilla;
  double eta0 = 1e-4;
  // AdaptiveLR: eta_{t+1} = eta_t (1 + growth).
  double growth = 1e-6;
  // RepSGD: second step size; the first one is eta0.
  double eta2 = 1e-4;
  std::int64_t steps = 1000;
  double init_scale_cr = 1.0;
  std::uint64_t seed = 0;
  // 0 selects max(1, steps / 2000).
  std::int64_t record_every = 0;
  // Labels are multiplied by this (+1 or -1) before entering the update.
  double label_sign = 1.0;

  std::int64_t effective_record_every() const {
    return record_every > 0 ? record_every : std::max<std::int64_t>(1, steps / 2000);
  }

  void validate() const {
    if (!(eta0 >= 0.0) || !std::isfinite(eta0)) throw std::invalid_argument("TrainerConfig: eta0 must be finite and >= 0");
    if (steps < 1) throw std::invalid_argument("TrainerConfig: steps must be >= 1");
    if (!(init_scale_cr > 0.0 && init_scale_cr <= 1.0)) {
      throw std::invalid_argument("TrainerConfig: init_scale_cr must lie in (0, 1]");
    }
    if (record_every < 0) throw std::invalid_argument("TrainerConfig: record_every must be >= 0");
    if (variant == Variant::AdaptiveLR && (!(growth > 0.0) || !std::isfinite(growth))) {
      throw std::invalid_argument("TrainerConfig: growth must be finite and > 0");
    }
    if (variant == Variant::RepSGD && (!(eta2 >= 0.0) || !std::isfinite(eta2))) {
      throw std::invalid_argument("TrainerConfig: eta2 must be finite and >= 0");
    }
    if (label_sign != 1.0 && label_sign != -1.0) throw std::invalid_argument("TrainerConfig: label_sign must be +1 or -1");
  }
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, std::int64_t step) : std::runtime_error(what), step_(step) {}
  std::int64_t step() const { return step_; }

 private:
  std::int64_t step_;
};

struct TrajectoryRecord {
  std::vector<std::int64_t> times;
  std::vector<double> m_t;
  std::vector<double> q_norm_w;
  std::vector<double> w_sig_norm;
  std::vector<double> w_perp_norm;
  std::vector<double> eta_t;
  // First t with m_t >= 0.5 (|m_t| for sign-symmetric links), checked every step.
  std::optional<std::int64_t> escape_time;
  double noise_budget = 0.0;  // eta0 ||Q^{1/2}||_F sqrt(T)
  double m0 = 0.0;
  double final_m = 0.0;
  // Largest relative gap between tracked and recomputed scalars at a resync.
  double max_resync_drift = 0.0;
  bool symmetric_link = false;

  // Alignment used for escape and summaries.
  double alignment(double m) const { return symmetric_link ? std::abs(m) : m; }
  double final_alignment() const { return alignment(final_m); }
};

// w0 = r w'/||w'|| with w' ~ N(0, I) and r set so ||Q^{1/2} w0|| = cr ||Q^{1/2} w*||.
inline Eigen::VectorXd init_weights(const SimInstance& inst, double cr, Rng& rng) {
  if (!(cr > 0.0 && cr <= 1.0)) throw std::invalid_argument("init_weights: cr must lie in (0, 1]");
  Eigen::VectorXd w = rng.normal_vector(inst.cov.dim());
  w /= w.norm();
  const double qn = inst.cov.q_norm(w);
  w *= cr * inst.q_sqrt_w_star_norm / qn;
  return w;
}

// Q-correlation of w with w*.
inline double overlap(const SimInstance& inst, const Eigen::VectorXd& w) {
  const double qn = inst.cov.q_norm(w);
  if (!(qn > 0.0)) throw std::domain_error("overlap: ||Q^{1/2} w|| vanishes");
  return w.dot(inst.q_w_star) / (qn * inst.q_sqrt_w_star_norm);
}

// w + eta y 1{w.x > 0} x.
inline Eigen::VectorXd sgd_step(const Eigen::VectorXd& w, const Eigen::VectorXd& x, double y, double eta) {
  if (w.size() != x.size()) throw std::invalid_argument("sgd_step: dimension mismatch");
  if (w.dot(x) > 0.0) return w + (eta * y) * x;
  return w;
}

// Tangent step in the Q-geometry followed by renormalization to unit Q-norm.
inline Eigen::VectorXd spherical_sgd_step(const Eigen::VectorXd& w, const Eigen::VectorXd& x, double y, double eta,
                                          const CovarianceSpec& q) {
  if (w.size() != x.size()) throw std::invalid_argument("spherical_sgd_step: dimension mismatch");
  if (std::abs(q.q_norm(w) - 1.0) > 1e-8) throw std::invalid_argument("spherical_sgd_step: w must have unit Q-norm");
  if (!(w.dot(x) > 0.0)) return w;
  // grad = -y x; grad_s = grad - <grad, w>_Q w.
  const Eigen::VectorXd grad = -y * x;
  const Eigen::VectorXd grad_s = grad - q.q_inner(grad, w) * w;
  const Eigen::VectorXd w_tilde = w - eta * grad_s;
  const double n = q.q_norm(w_tilde);
  if (!(n >= 1e-14)) throw std::domain_error("spherical_sgd_step: degenerate Q-norm after step");
  return w_tilde / n;
}

// w~ = w + eta1 y 1{w.x > 0} x, then w + eta2 y 1{w~.x > 0} x on the same sample.
inline Eigen::VectorXd rep_sgd_step(const Eigen::VectorXd& w, const Eigen::VectorXd& x, double y, double eta1,
                                    double eta2) {
  if (w.size() != x.size()) throw std::invalid_argument("rep_sgd_step: dimension mismatch");
  const double wx = w.dot(x);
  const double wtx = wx > 0.0 ? wx + eta1 * y * x.squaredNorm() : wx;
  if (wtx > 0.0) return w + (eta2 * y) * x;
  return w;
}

struct Schedule {
  double eta = 0.0;
  std::int64_t steps = 0;
};

// Learning rate and horizon by information exponent:
//   k* = 1: eta = eps^2 Theta^2,                  T = eps^-2 Theta^-2
//   k* = 2: eta = eps^2 Theta^2 / |log m0|,       T = eps^-2 log^2(m0) Theta^-2
//   k* >= 3: eta = eps^2 m0^{k*-2} Theta^2,       T = eps^-2 m0^{2(2-k*)} Theta^-2
inline Schedule theorem1_schedule(int k_star, double m0, double theta_ratio, double eps_d) {
  if (k_star < 1) throw std::invalid_argument("theorem1_schedule: k_star must be >= 1");
  if (!(m0 > 0.0)) throw std::domain_error("theorem1_schedule: m0 must be positive");
  if (!(m0 < 1.0)) throw std::invalid_argument("theorem1_schedule: m0 must be < 1");
  if (!(theta_ratio > 0.0 && theta_ratio <= 1.0)) throw std::invalid_argument("theorem1_schedule: theta_ratio must lie in (0, 1]");
  if (!(eps_d > 0.0 && eps_d < 1.0)) throw std::invalid_argument("theorem1_schedule: eps_d must lie in (0, 1)");
  const double e2 = eps_d * eps_d;
  const double t2 = theta_ratio * theta_ratio;
  double eta = 0.0;
  double t = 0.0;
  if (k_star == 1) {
    eta = e2 * t2;
    t = 1.0 / (e2 * t2);
  } else if (k_star == 2) {
    const double lg = std::abs(std::log(m0));
    eta = e2 * t2 / lg;
    t = lg * lg / (e2 * t2);
  } else {
    eta = e2 * std::pow(m0, k_star - 2) * t2;
    t = std::pow(m0, 2.0 * (2 - k_star)) / (e2 * t2);
  }
  // Round up, ignoring representation error of exact integers.
  const double r = std::round(t);
  const double steps = std::abs(t - r) <= 1e-9 * std::max(1.0, t) ? r : std::ceil(t);
  return {eta, static_cast<std::int64_t>(std::max(1.0, steps))};
}

namespace detail {

// Scalars tracked along the trajectory: s = <w, Q w*>, n2 = w^T Q w,
// sig = <w, w*>, e2 = ||w||^2, plus the vector qw = Q w.
struct TrackedState {
  Eigen::VectorXd qw;
  double s = 0.0;
  double n2 = 0.0;
  double sig = 0.0;
  double e2 = 0.0;

  void recompute(const SimInstance& inst, const Eigen::VectorXd& w) {
    inst.cov.apply_q(w, qw);
    s = w.dot(inst.q_w_star);
    n2 = w.dot(qw);
    sig = w.dot(inst.w_star);
    e2 = w.squaredNorm();
  }

  double m(const SimInstance& inst) const { return s / (std::sqrt(std::max(n2, 0.0)) * inst.q_sqrt_w_star_norm); }
};

inline double rel_gap(double tracked, double exact) {
  return std::abs(tracked - exact) / std::max(std::abs(exact), 1e-300);
}

}  // namespace detail

// Runs cfg.steps online updates, one fresh sample per update (RepSGD reuses
// each sample for its two gradient evaluations). The spherical variant starts
// from the same direction as the others, rescaled to unit Q-norm.
inline TrajectoryRecord run_trajectory(const SimInstance& inst, const TrainerConfig& cfg) {
  cfg.validate();
  const Eigen::Index d = inst.cov.dim();
  Rng rng(cfg.seed);
  Eigen::VectorXd w = init_weights(inst, cfg.init_scale_cr, rng);
  if (cfg.variant == Variant::SphericalQ) w /= inst.cov.q_norm(w);

  TrajectoryRecord rec;
  rec.symmetric_link = inst.link.sign_symmetric();
  rec.noise_budget = cfg.eta0 * std::sqrt(inst.cov.trace()) * std::sqrt(static_cast<double>(cfg.steps));
  const std::int64_t every = cfg.effective_record_every();
  const std::size_t expected = static_cast<std::size_t>(cfg.steps / every + 2);
  rec.times.reserve(expected);
  rec.m_t.reserve(expected);
  rec.q_norm_w.reserve(expected);
  rec.w_sig_norm.reserve(expected);
  rec.w_perp_norm.reserve(expected);
  rec.eta_t.reserve(expected);

  detail::TrackedState st;
  st.qw.resize(d);
  st.recompute(inst, w);
  rec.m0 = st.m(inst);

  Eigen::VectorXd g(d);
  Eigen::VectorXd x(d);
  Eigen::VectorXd qx(d);
  double eta = cfg.eta0;

  auto record = [&](std::int64_t t) {
    rec.times.push_back(t);
    rec.m_t.push_back(std::clamp(st.m(inst), -1.0, 1.0));
    rec.q_norm_w.push_back(std::sqrt(std::max(st.n2, 0.0)));
    rec.w_sig_norm.push_back(st.sig);
    rec.w_perp_norm.push_back(std::sqrt(std::max(st.e2 - st.sig * st.sig, 0.0)));
    rec.eta_t.push_back(eta);
  };
  auto check_escape = [&](std::int64_t t) {
    if (!rec.escape_time && rec.alignment(st.m(inst)) >= kEscapeThreshold) rec.escape_time = t;
  };

  record(0);
  check_escape(0);

  for (std::int64_t t = 1; t <= cfg.steps; ++t) {
    rng.fill_normal(g);
    inst.cov.apply_q_sqrt(g, x);
    const double z_star = x.dot(inst.w_star) / inst.q_sqrt_w_star_norm;
    const double y = cfg.label_sign * inst.link(z_star);
    const double wx = w.dot(x);

    double alpha = 0.0;  // w <- beta w + alpha x
    double beta = 1.0;
    switch (cfg.variant) {
      case Variant::Vanilla:
      case Variant::AdaptiveLR:
        if (wx > 0.0) alpha = eta * y;
        break;
      case Variant::RepSGD: {
        const double wtx = wx > 0.0 ? wx + eta * y * x.squaredNorm() : wx;
        if (wtx > 0.0) alpha = cfg.eta2 * y;
        break;
      }
      case Variant::SphericalQ:
        if (wx > 0.0) {
          // w~ = w + a (x - <x, w>_Q w), a = eta y.
          const double a = eta * y;
          alpha = a;
          beta = 1.0 - a * x.dot(st.qw);
        }
        break;
    }

    if (alpha != 0.0 || beta != 1.0) {
      inst.cov.apply_q(x, qx);
      const double xqw = x.dot(st.qw);
      const double xqx = x.dot(qx);
      const double xw = wx;
      st.s = beta * st.s + alpha * x.dot(inst.q_w_star);
      st.n2 = beta * beta * st.n2 + 2.0 * alpha * beta * xqw + alpha * alpha * xqx;
      st.sig = beta * st.sig + alpha * x.dot(inst.w_star);
      st.e2 = beta * beta * st.e2 + 2.0 * alpha * beta * xw + alpha * alpha * x.squaredNorm();
      if (beta != 1.0) {
        w *= beta;
        st.qw *= beta;
      }
      w.noalias() += alpha * x;
      st.qw.noalias() += alpha * qx;
      if (cfg.variant == Variant::SphericalQ) {
        if (!(st.n2 >= 1e-28)) throw TrainingError("run_trajectory: degenerate Q-norm at step " + std::to_string(t), t);
        const double inv = 1.0 / std::sqrt(st.n2);
        w *= inv;
        st.qw *= inv;
        st.s *= inv;
        st.sig *= inv;
        st.e2 *= inv * inv;
        st.n2 = 1.0;
      }
      if (!std::isfinite(st.n2) || !std::isfinite(st.e2) || !std::isfinite(st.s)) {
        throw TrainingError("run_trajectory: non-finite weights at step " + std::to_string(t), t);
      }
    }

    if (cfg.variant == Variant::AdaptiveLR) eta *= 1.0 + cfg.growth;

    if (t % kResyncEvery == 0) {
      if (!w.allFinite()) throw TrainingError("run_trajectory: non-finite weights at step " + std::to_string(t), t);
      detail::TrackedState exact;
      exact.qw.resize(d);
      exact.recompute(inst, w);
      const double drift = std::max({std::abs(st.m(inst) - exact.m(inst)), detail::rel_gap(st.n2, exact.n2),
                                     detail::rel_gap(st.e2, exact.e2)});
      rec.max_resync_drift = std::max(rec.max_resync_drift, drift);
      st = std::move(exact);
    }

    check_escape(t);
    if (t % every == 0 || t == cfg.steps) record(t);
  }
  rec.final_m = rec.m_t.back();
  return rec;
}

inline void write_trajectory_csv_header(std::ostream& os, const std::vector<std::string>& extra = {}) {
  os << "t,m_t,q_norm_w,w_sig_norm,w_perp_norm,eta_t";
  for (const auto& e : extra) os << ',' << e;
  os << '\n';
}

// One row per recorded step, 10 significant digits; `extra` cells are appended verbatim.
inline void write_trajectory_csv_rows(std::ostream& os, const TrajectoryRecord& rec,
                                      const std::vector<std::string>& extra = {}) {
  std::ostringstream line;
  line << std::setprecision(10);
  for (std::size_t i = 0; i < rec.times.size(); ++i) {
    line.str("");
    line << rec.times[i] << ',' << rec.m_t[i] << ',' << rec.q_norm_w[i] << ',' << rec.w_sig_norm[i] << ','
         << rec.w_perp_norm[i] << ',' << rec.eta_t[i];
    for (const auto& e : extra) line << ',' << e;
    line << '\n';
    os << line.str();
  }
}

inline void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& rec) {
  write_trajectory_csv_header(os);
  write_trajectory_csv_rows(os, rec);
}

}  // namespace anisim
