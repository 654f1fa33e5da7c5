#pragma once

// Probabilists' Hermite polynomials H_n (H_0 = 1, H_{n+1} = x H_n - n H_{n-1})
// and expansions in the orthonormal basis H_n / sqrt(n!) of L2(N(0,1)).
//
// Every coefficient vector in this library uses the same convention:
//   f(x) = sum_k a_k H_k(x) / sqrt(k!),   a_k = E[f(Z) H_k(Z)] / sqrt(k!).

#include <cmath>
#include <map>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace anisim {

inline double hermite(int n, double x) {
  if (n < 0) throw std::invalid_argument("hermite: negative degree");
  if (n == 0) return 1.0;
  double prev = 1.0;
  double cur = x;
  for (int k = 1; k < n; ++k) {
    const double next = x * cur - k * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

// Writes H_k(x)/sqrt(k!) for k = 0..out.size()-1. The normalized recurrence
// h_{k+1} = (x h_k - sqrt(k) h_{k-1}) / sqrt(k+1) stays in range for large k.
inline void hermite_normalized_all(double x, std::span<double> out) {
  if (out.empty()) return;
  out[0] = 1.0;
  if (out.size() == 1) return;
  out[1] = x;
  for (std::size_t k = 1; k + 1 < out.size(); ++k) {
    const double kd = static_cast<double>(k);
    out[k + 1] = (x * out[k] - std::sqrt(kd) * out[k - 1]) / std::sqrt(kd + 1.0);
  }
}

inline double hermite_normalized(int n, double x) {
  if (n < 0) throw std::invalid_argument("hermite_normalized: negative degree");
  std::vector<double> h(static_cast<std::size_t>(n) + 1);
  hermite_normalized_all(x, h);
  return h.back();
}

class HermiteCoeffs {
 public:
  HermiteCoeffs() : values_(1, 0.0) {}

  explicit HermiteCoeffs(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw std::invalid_argument("HermiteCoeffs: empty coefficient vector");
    for (double v : values_) {
      if (!std::isfinite(v)) throw std::invalid_argument("HermiteCoeffs: non-finite coefficient");
    }
  }

  static HermiteCoeffs zeros(int max_degree) {
    if (max_degree < 0) throw std::invalid_argument("HermiteCoeffs: negative max_degree");
    return HermiteCoeffs(std::vector<double>(static_cast<std::size_t>(max_degree) + 1, 0.0));
  }

  int max_degree() const { return static_cast<int>(values_.size()) - 1; }

  // Coefficients beyond max_degree read as zero.
  double operator[](int k) const {
    return (k >= 0 && k <= max_degree()) ? values_[static_cast<std::size_t>(k)] : 0.0;
  }

  std::span<const double> values() const { return values_; }

  double evaluate(double x) const {
    double prev = 0.0;
    double cur = 1.0;
    double s = values_[0];
    for (std::size_t k = 0; k + 1 < values_.size(); ++k) {
      const double kd = static_cast<double>(k);
      const double next = (x * cur - std::sqrt(kd) * prev) / std::sqrt(kd + 1.0);
      prev = cur;
      cur = next;
      s += values_[k + 1] * cur;
    }
    return s;
  }

  double squared_norm() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return s;
  }

 private:
  std::vector<double> values_;
};

// Gauss–Hermite rule for the standard Gaussian measure (weights sum to one).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Golub–Welsch: nodes are the eigenvalues of the Jacobi matrix of the
// probabilists' recurrence (zero diagonal, off-diagonal sqrt(k)); weights are
// the squared first components of the normalized eigenvectors.
inline GaussHermiteRule gauss_hermite_rule(int order) {
  if (order < 1) throw std::invalid_argument("gauss_hermite_rule: order must be >= 1");
  const Eigen::Index n = order;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n > 1 ? n - 1 : 0);
  for (Eigen::Index k = 0; k + 1 < n; ++k) sub[k] = std::sqrt(static_cast<double>(k + 1));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw std::runtime_error("gauss_hermite_rule: eigensolver failed");

  GaussHermiteRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v0 = solver.eigenvectors()(0, i);
    rule.nodes[static_cast<std::size_t>(i)] = solver.eigenvalues()[i];
    rule.weights[static_cast<std::size_t>(i)] = v0 * v0;
  }
  // The exact rule is symmetric; enforce it so odd moments vanish exactly.
  for (std::size_t i = 0, j = rule.nodes.size() - 1; i < j; ++i, --j) {
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = w;
    rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return rule;
}

inline int default_quad_order(int max_degree) { return 2 * max_degree + 32; }

// a_k = E[f(Z) H_k(Z)] / sqrt(k!) by Gauss–Hermite quadrature. Exact for
// polynomial f of degree <= 2*quad_order - 1 - max_degree. Discontinuous f
// (step, sign) converge slowly; use step_coeffs / sign_coeffs for those.
template <class F>
HermiteCoeffs hermite_coeffs_of(F&& f, int max_degree, int quad_order) {
  if (max_degree < 0) throw std::invalid_argument("hermite_coeffs_of: negative max_degree");
  if (quad_order < max_degree + 1) {
    throw std::invalid_argument("hermite_coeffs_of: quad_order must be >= max_degree + 1");
  }
  const GaussHermiteRule rule = gauss_hermite_rule(quad_order);
  std::vector<double> a(static_cast<std::size_t>(max_degree) + 1, 0.0);
  std::vector<double> h(a.size());
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double x = rule.nodes[i];
    const double fx = f(x);
    if (!std::isfinite(fx)) {
      throw std::domain_error("hermite_coeffs_of: non-finite function value at node " + std::to_string(x));
    }
    hermite_normalized_all(x, h);
    for (std::size_t k = 0; k < a.size(); ++k) a[k] += rule.weights[i] * fx * h[k];
  }
  return HermiteCoeffs(std::move(a));
}

template <class F>
HermiteCoeffs hermite_coeffs_of(F&& f, int max_degree) {
  return hermite_coeffs_of(std::forward<F>(f), max_degree, default_quad_order(max_degree));
}

// Coefficients of the ReLU derivative 1{x > 0}. Uses
// integral_0^inf H_k phi = phi(0) H_{k-1}(0) for k >= 1.
inline HermiteCoeffs step_coeffs(int max_degree) {
  if (max_degree < 0) throw std::invalid_argument("step_coeffs: negative max_degree");
  const double phi0 = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  std::vector<double> h(static_cast<std::size_t>(max_degree) + 1);
  hermite_normalized_all(0.0, h);
  std::vector<double> b(h.size(), 0.0);
  b[0] = 0.5;
  for (std::size_t k = 1; k < b.size(); ++k) {
    b[k] = phi0 * h[k - 1] / std::sqrt(static_cast<double>(k));
  }
  return HermiteCoeffs(std::move(b));
}

// sign(x) = 2 * 1{x > 0} - 1 almost everywhere.
inline HermiteCoeffs sign_coeffs(int max_degree) {
  const HermiteCoeffs step = step_coeffs(max_degree);
  std::vector<double> a(step.values().begin(), step.values().end());
  a[0] = 0.0;
  for (std::size_t k = 1; k < a.size(); ++k) a[k] *= 2.0;
  return HermiteCoeffs(std::move(a));
}

inline int information_exponent(const HermiteCoeffs& c, double tol = 1e-8) {
  if (!(tol > 0.0)) throw std::invalid_argument("information_exponent: tol must be positive");
  for (int k = 1; k <= c.max_degree(); ++k) {
    if (std::abs(c[k]) > tol) return k;
  }
  throw std::domain_error("no information exponent within max_degree");
}

// Coefficients of x -> x f(x), from <xf, H_n> = <f, H_{n+1}> + n <f, H_{n-1}>:
//   c_n = sqrt(n+1) a_{n+1} + sqrt(n) a_{n-1}.
inline HermiteCoeffs xf_coeffs(const HermiteCoeffs& a) {
  const int out_degree = a.max_degree() + 1;
  std::vector<double> c(static_cast<std::size_t>(out_degree) + 1, 0.0);
  for (int n = 0; n <= out_degree; ++n) {
    c[static_cast<std::size_t>(n)] =
        std::sqrt(static_cast<double>(n) + 1.0) * a[n + 1] + std::sqrt(static_cast<double>(n)) * a[n - 1];
  }
  return HermiteCoeffs(std::move(c));
}

// H_n(gamma x) = sum_k gamma^{n-2k} (gamma^2 - 1)^k n! / ((n-2k)! k! 2^k) H_{n-2k}(x).
// Keys are the degrees n-2k.
inline std::map<int, double> hermite_scale_expand(int n, double gamma) {
  if (n < 0) throw std::invalid_argument("hermite_scale_expand: negative degree");
  std::map<int, double> out;
  const double g2m1 = gamma * gamma - 1.0;
  double comb = 1.0;  // n! / ((n-2k)! k! 2^k)
  for (int k = 0; 2 * k <= n; ++k) {
    out[n - 2 * k] = std::pow(gamma, n - 2 * k) * std::pow(g2m1, k) * comb;
    comb *= static_cast<double>(n - 2 * k) * static_cast<double>(n - 2 * k - 1) / (2.0 * (k + 1));
  }
  return out;
}

// E[f(gamma Z)] for f given by normalized coefficients: the H_0 projection of
// each scaled basis element, (gamma^2-1)^j (2j)! / (j! 2^j) for degree 2j.
inline double gaussian_mean_scaled(const HermiteCoeffs& a, double gamma) {
  const double g2m1 = gamma * gamma - 1.0;
  double s = 0.0;
  for (int n = 0; n <= a.max_degree(); n += 2) {
    if (a[n] == 0.0) continue;
    const int j = n / 2;
    // a_n / sqrt(n!) * n! / (j! 2^j) = a_n * sqrt(n!) / (j! 2^j)
    const double log_mag = 0.5 * std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - j * std::numbers::ln2;
    s += a[n] * std::exp(log_mag) * std::pow(g2m1, j);
  }
  return s;
}

// E[H_n(U) H_m(V)] for standard Gaussians with correlation rho.
inline double correlated_hermite_expectation(int n, int m, double rho) {
  if (n < 0 || m < 0) throw std::invalid_argument("correlated_hermite_expectation: negative degree");
  if (!(std::abs(rho) <= 1.0)) throw std::invalid_argument("correlated_hermite_expectation: |rho| > 1");
  if (n != m) return 0.0;
  double fact = 1.0;
  for (int k = 2; k <= n; ++k) fact *= k;
  return fact * std::pow(rho, n);
}

}  // namespace anisim
