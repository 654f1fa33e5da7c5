#pragma once

// Single Index Model y = f(<x, w*> / ||Q^{1/2} w*||) with x ~ N(0, Q).

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "anisim/covariance.hpp"
#include "anisim/hermite.hpp"
#include "anisim/rng.hpp"

namespace anisim {

enum class LinkKind { Hermite, Sign, Coeffs };

// Truncation degree for the Hermite series of closed-form links with an
// infinite expansion (sign).
inline constexpr int kDefaultSeriesDegree = 40;

class LinkFunction {
 public:
  // f = H_k / sqrt(k!). Unbounded for k >= 1.
  static LinkFunction hermite(int degree) {
    if (degree < 1) throw std::invalid_argument("LinkFunction::hermite: degree must be >= 1");
    std::vector<double> a(static_cast<std::size_t>(degree) + 1, 0.0);
    a.back() = 1.0;
    LinkFunction f(LinkKind::Hermite, HermiteCoeffs(std::move(a)));
    f.degree_ = degree;
    f.bounded_ = false;
    f.second_moment_ = 1.0;
    return f;
  }

  static LinkFunction sign(int series_degree = kDefaultSeriesDegree) {
    LinkFunction f(LinkKind::Sign, sign_coeffs(series_degree));
    f.bounded_ = true;
    f.second_moment_ = 1.0;
    return f;
  }

  // Takes an already normalized coefficient vector; see normalize_link.
  static LinkFunction from_normalized(HermiteCoeffs coeffs) {
    LinkFunction f(LinkKind::Coeffs, std::move(coeffs));
    f.bounded_ = f.coeffs_.max_degree() == 0;
    f.second_moment_ = f.coeffs_.squared_norm();
    return f;
  }

  double operator()(double z) const {
    switch (kind_) {
      case LinkKind::Hermite: return hermite_normalized_fast(z);
      case LinkKind::Sign: return z > 0.0 ? 1.0 : (z < 0.0 ? -1.0 : 0.0);
      case LinkKind::Coeffs: return coeffs_.evaluate(z);
    }
    return 0.0;
  }

  LinkKind kind() const { return kind_; }
  const HermiteCoeffs& coeffs() const { return coeffs_; }
  int k_star() const { return k_star_; }
  int degree() const { return degree_; }
  bool bounded() const { return bounded_; }
  // E f(Z)^2 of the evaluator itself (the truncated series may fall short of
  // it for links with infinite expansions).
  double second_moment() const { return second_moment_; }

  // f(-z) = f(z): w* and -w* generate identical data.
  bool sign_symmetric() const {
    if (kind_ == LinkKind::Sign) return false;
    for (int k = 1; k <= coeffs_.max_degree(); k += 2) {
      if (std::abs(coeffs_[k]) > 1e-12) return false;
    }
    return true;
  }

  std::string describe() const {
    switch (kind_) {
      case LinkKind::Hermite: return "hermite_" + std::to_string(degree_);
      case LinkKind::Sign: return "sign";
      case LinkKind::Coeffs: return "coeffs";
    }
    return "unknown";
  }

 private:
  LinkFunction(LinkKind kind, HermiteCoeffs coeffs) : kind_(kind), coeffs_(std::move(coeffs)) {
    k_star_ = information_exponent(coeffs_);
    degree_ = coeffs_.max_degree();
  }

  double hermite_normalized_fast(double z) const {
    double prev = 1.0;
    double cur = z;
    double fact = 1.0;
    for (int k = 1; k < degree_; ++k) {
      const double next = z * cur - k * prev;
      prev = cur;
      cur = next;
      fact *= (k + 1);
    }
    return cur / std::sqrt(fact);
  }

  LinkKind kind_;
  HermiteCoeffs coeffs_;
  int k_star_ = 1;
  int degree_ = 0;
  bool bounded_ = true;
  double second_moment_ = 1.0;
};

// Zero the mean, rescale to unit second moment, detect k*.
inline LinkFunction normalize_link(const HermiteCoeffs& raw) {
  std::vector<double> a(raw.values().begin(), raw.values().end());
  a[0] = 0.0;
  double sq = 0.0;
  for (double v : a) sq += v * v;
  if (!(sq > 0.0)) throw std::domain_error("normalize_link: link is constant (no coefficient of degree >= 1)");
  const double inv = 1.0 / std::sqrt(sq);
  for (double& v : a) v *= inv;
  return LinkFunction::from_normalized(HermiteCoeffs(std::move(a)));
}

struct SimInstance {
  CovarianceSpec cov;
  Eigen::VectorXd w_star;
  LinkFunction link;
  AlignmentStats stats;
  double q_sqrt_w_star_norm = 1.0;  // ||Q^{1/2} w*||
  Eigen::VectorXd q_w_star;         // Q w*

  bool unbounded_link() const { return !link.bounded(); }
};

inline SimInstance make_instance(CovarianceSpec cov, Eigen::VectorXd w_star, LinkFunction link) {
  if (w_star.size() != cov.dim()) throw std::invalid_argument("make_instance: w_star dimension mismatch");
  const double n = w_star.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("make_instance: w_star must be nonzero and finite");
  w_star /= n;
  AlignmentStats stats = alignment_stats(cov, w_star);
  Eigen::VectorXd qw = cov.apply_q(w_star);
  const double root = std::sqrt(stats.lambda);
  return SimInstance{std::move(cov), std::move(w_star), std::move(link), stats, root, std::move(qw)};
}

struct Sample {
  Eigen::VectorXd x;
  double y = 0.0;
  double z_star = 0.0;
};

inline Sample generate_sample(const SimInstance& inst, Rng& rng) {
  Sample s;
  s.x = inst.cov.sample(rng);
  s.z_star = s.x.dot(inst.w_star) / inst.q_sqrt_w_star_norm;
  s.y = inst.link(s.z_star);
  return s;
}

// d_l = c_l b_l, with c the coefficients of x f(x) and b those of the ReLU
// derivative. E[z* f(z*) 1{z_t > 0}] = sum_l d_l m^l when corr(z*, z_t) = m.
inline std::vector<double> drift_series(const HermiteCoeffs& link_coeffs) {
  const HermiteCoeffs c = xf_coeffs(link_coeffs);
  const HermiteCoeffs b = step_coeffs(c.max_degree());
  std::vector<double> d(static_cast<std::size_t>(c.max_degree()) + 1);
  for (int l = 0; l <= c.max_degree(); ++l) d[static_cast<std::size_t>(l)] = c[l] * b[l];
  return d;
}

inline double eval_series(const std::vector<double>& d, double m) {
  double s = 0.0;
  for (std::size_t l = d.size(); l-- > 0;) s = s * m + d[l];
  return s;
}

struct AssumptionCoeffCheck {
  bool holds = false;
  double c_hat = 0.0;
  // +1: the link as given satisfies the inequality; -1: its negation does;
  // 0: neither.
  int sign = 0;
};

// Tests sum_k b_k c_k x^k <= -c x^{k*-1} on a uniform grid over (0, gamma'],
// for f and for -f. The inequality bounds the loss gradient; a link
// satisfying it with sign s makes m_t grow under SGD fed with labels -s*y.
inline AssumptionCoeffCheck check_assumption_coeff(const LinkFunction& link, double gamma_prime, int grid_points) {
  if (!(gamma_prime > 0.0 && gamma_prime <= 1.0)) {
    throw std::invalid_argument("check_assumption_coeff: gamma_prime must lie in (0, 1]");
  }
  if (grid_points < 1) throw std::invalid_argument("check_assumption_coeff: grid_points must be >= 1");
  const std::vector<double> d = drift_series(link.coeffs());
  const int power = link.k_star() - 1;
  double c_pos = std::numeric_limits<double>::infinity();
  double c_neg = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= grid_points; ++i) {
    const double x = gamma_prime * static_cast<double>(i) / grid_points;
    const double g = eval_series(d, x);
    const double scale = std::pow(x, power);
    c_pos = std::min(c_pos, -g / scale);
    c_neg = std::min(c_neg, g / scale);
  }
  AssumptionCoeffCheck out;
  if (c_pos > 0.0) {
    out = {true, c_pos, +1};
  } else if (c_neg > 0.0) {
    out = {true, c_neg, -1};
  } else {
    out = {false, std::max(c_pos, c_neg), 0};
  }
  return out;
}

}  // namespace anisim
