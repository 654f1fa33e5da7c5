#pragma once

// Structured covariance models Q normalized to operator norm one, with O(d)
// application of Q and Q^{1/2} for the identity, spiked and diagonal forms.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "anisim/rng.hpp"

namespace anisim {

enum class CovarianceKind { Identity, Spiked, Diagonal, Dense };

inline const char* to_string(CovarianceKind k) {
  switch (k) {
    case CovarianceKind::Identity: return "identity";
    case CovarianceKind::Spiked: return "spiked";
    case CovarianceKind::Diagonal: return "diagonal";
    case CovarianceKind::Dense: return "dense";
  }
  return "unknown";
}

class CovarianceSpec {
 public:
  static CovarianceSpec identity(Eigen::Index d) {
    if (d < 1) throw std::invalid_argument("CovarianceSpec: dimension must be >= 1");
    CovarianceSpec s(CovarianceKind::Identity, d);
    s.trace_ = static_cast<double>(d);
    s.frob_sq_ = static_cast<double>(d);
    return s;
  }

  // Q = (I + kappa theta theta^T) / (1 + kappa). theta is normalized here.
  static CovarianceSpec spiked(Eigen::Index d, double kappa, Eigen::VectorXd theta) {
    if (d < 1) throw std::invalid_argument("CovarianceSpec: dimension must be >= 1");
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("CovarianceSpec: kappa must be finite and >= 0");
    if (theta.size() != d) throw std::invalid_argument("CovarianceSpec: theta dimension mismatch");
    const double n = theta.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("CovarianceSpec: theta must be a nonzero finite vector");
    CovarianceSpec s(CovarianceKind::Spiked, d);
    s.kappa_ = kappa;
    s.theta_ = theta / n;
    s.perp_eig_ = 1.0 / (1.0 + kappa);
    const double dd = static_cast<double>(d);
    s.trace_ = (dd + kappa) / (1.0 + kappa);
    s.frob_sq_ = (dd - 1.0) * s.perp_eig_ * s.perp_eig_ + 1.0;
    return s;
  }

  // Spectrum is rescaled so its maximum is one.
  static CovarianceSpec diagonal(Eigen::VectorXd spectrum) {
    if (spectrum.size() < 1) throw std::invalid_argument("CovarianceSpec: empty spectrum");
    if (!spectrum.allFinite() || spectrum.minCoeff() < 0.0) {
      throw std::invalid_argument("CovarianceSpec: spectrum entries must be finite and >= 0");
    }
    const double top = spectrum.maxCoeff();
    if (!(top > 0.0)) throw std::invalid_argument("CovarianceSpec: spectrum is identically zero");
    CovarianceSpec s(CovarianceKind::Diagonal, spectrum.size());
    s.scale_ = 1.0 / top;
    s.diag_ = spectrum * s.scale_;
    s.diag_sqrt_ = s.diag_.cwiseSqrt();
    s.trace_ = s.diag_.sum();
    s.frob_sq_ = s.diag_.squaredNorm();
    return s;
  }

  // Symmetric PSD matrix; eigenvalues in [-1e-10, 0) are clamped to zero.
  static CovarianceSpec dense(const Eigen::MatrixXd& m) {
    if (m.rows() < 1 || m.rows() != m.cols()) throw std::invalid_argument("CovarianceSpec: dense matrix must be square");
    if (!m.allFinite()) throw std::invalid_argument("CovarianceSpec: dense matrix has non-finite entries");
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
      throw std::invalid_argument("CovarianceSpec: dense matrix is not symmetric");
    }
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success) throw std::runtime_error("CovarianceSpec: eigendecomposition failed");
    Eigen::VectorXd eig = es.eigenvalues();
    if (eig.minCoeff() < -1e-10) throw std::invalid_argument("CovarianceSpec: dense matrix is not positive semidefinite");
    eig = eig.cwiseMax(0.0);
    const double top = eig.maxCoeff();
    if (!(top > 0.0)) throw std::invalid_argument("CovarianceSpec: dense matrix is zero");
    CovarianceSpec s(CovarianceKind::Dense, m.rows());
    s.scale_ = 1.0 / top;
    eig *= s.scale_;
    const Eigen::MatrixXd& v = es.eigenvectors();
    s.dense_ = v * eig.asDiagonal() * v.transpose();
    s.dense_sqrt_ = v * eig.cwiseSqrt().asDiagonal() * v.transpose();
    s.trace_ = eig.sum();
    s.frob_sq_ = eig.squaredNorm();
    return s;
  }

  CovarianceKind kind() const { return kind_; }
  Eigen::Index dim() const { return d_; }
  double kappa() const { return kappa_; }
  const Eigen::VectorXd& theta() const { return theta_; }
  const Eigen::VectorXd& spectrum() const { return diag_; }
  // Factor applied to the user input to reach ||Q|| = 1.
  double normalization_factor() const { return scale_; }

  // tr Q = ||Q^{1/2}||_F^2
  double trace() const { return trace_; }
  double frobenius() const { return std::sqrt(frob_sq_); }

  // Allocation-free forms for the training loop; `out` must not alias `v`.
  void apply_q(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
    check_dim(v);
    switch (kind_) {
      case CovarianceKind::Identity: out = v; return;
      case CovarianceKind::Spiked: {
        const double p = theta_.dot(v);
        out = perp_eig_ * v;
        out.noalias() += (perp_eig_ * kappa_ * p) * theta_;
        return;
      }
      case CovarianceKind::Diagonal: out = diag_.cwiseProduct(v); return;
      case CovarianceKind::Dense: out.noalias() = dense_ * v; return;
    }
  }

  // Spiked: Q^{1/2} = (I + (sqrt(1+kappa) - 1) theta theta^T) / sqrt(1+kappa).
  void apply_q_sqrt(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
    check_dim(v);
    switch (kind_) {
      case CovarianceKind::Identity: out = v; return;
      case CovarianceKind::Spiked: {
        const double root = std::sqrt(1.0 + kappa_);
        const double p = theta_.dot(v);
        out = v / root;
        out.noalias() += ((root - 1.0) * p / root) * theta_;
        return;
      }
      case CovarianceKind::Diagonal: out = diag_sqrt_.cwiseProduct(v); return;
      case CovarianceKind::Dense: out.noalias() = dense_sqrt_ * v; return;
    }
  }

  Eigen::VectorXd apply_q(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(d_);
    apply_q(v, out);
    return out;
  }

  Eigen::VectorXd apply_q_sqrt(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(d_);
    apply_q_sqrt(v, out);
    return out;
  }

  double q_inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    check_dim(u);
    return u.dot(apply_q(v));
  }

  double q_norm(const Eigen::VectorXd& v) const { return std::sqrt(std::max(0.0, q_inner(v, v))); }

  // x = Q^{1/2} g with g ~ N(0, I).
  Eigen::VectorXd sample(Rng& rng) const { return apply_q_sqrt(rng.normal_vector(d_)); }

  Eigen::MatrixXd to_matrix() const {
    Eigen::MatrixXd m(d_, d_);
    for (Eigen::Index j = 0; j < d_; ++j) m.col(j) = apply_q(Eigen::VectorXd::Unit(d_, j));
    return m;
  }

 private:
  CovarianceSpec(CovarianceKind k, Eigen::Index d) : kind_(k), d_(d) {}

  void check_dim(const Eigen::VectorXd& v) const {
    if (v.size() != d_) {
      throw std::invalid_argument("CovarianceSpec: dimension mismatch (expected " + std::to_string(d_) + ", got " +
                                  std::to_string(v.size()) + ")");
    }
  }

  CovarianceKind kind_;
  Eigen::Index d_;
  double scale_ = 1.0;
  double trace_ = 0.0;
  double frob_sq_ = 0.0;
  double kappa_ = 0.0;
  double perp_eig_ = 1.0;
  Eigen::VectorXd theta_;
  Eigen::VectorXd diag_;
  Eigen::VectorXd diag_sqrt_;
  Eigen::MatrixXd dense_;
  Eigen::MatrixXd dense_sqrt_;
};

struct AlignmentStats {
  double theta_ratio = 0.0;   // ||Q^{1/2} w*|| / ||Q^{1/2}||_F
  double typical_m0 = 0.0;    // ||Q w*|| / (||Q^{1/2} w*|| ||Q^{1/2}||_F)
  double lambda = 0.0;        // <Q w*, w*>
  double lambda_prime = 0.0;  // sqrt(||Q w*||^2 - lambda^2)
  double trace_q = 0.0;
  double frob_q = 0.0;
};

// Q w* = lambda w* + lambda' w*_perp with w*_perp a unit vector orthogonal to w*.
inline AlignmentStats alignment_stats(const CovarianceSpec& q, const Eigen::VectorXd& w_star) {
  const double n = w_star.norm();
  if (std::abs(n - 1.0) > 1e-10) throw std::invalid_argument("alignment_stats: w_star must be a unit vector");
  const Eigen::VectorXd qw = q.apply_q(w_star);
  AlignmentStats s;
  s.lambda = w_star.dot(qw);
  if (!(s.lambda > 0.0)) throw std::domain_error("alignment_stats: Q^{1/2} w_star vanishes");
  const double qw_sq = qw.squaredNorm();
  s.lambda_prime = std::sqrt(std::max(0.0, qw_sq - s.lambda * s.lambda));
  s.trace_q = q.trace();
  s.frob_q = q.frobenius();
  s.theta_ratio = std::sqrt(s.lambda / s.trace_q);
  s.typical_m0 = std::sqrt(qw_sq) / (std::sqrt(s.lambda) * std::sqrt(s.trace_q));
  return s;
}

}  // namespace anisim
