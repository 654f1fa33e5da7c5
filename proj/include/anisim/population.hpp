#pragma once

// Deterministic population dynamics of the overlap m_t and the closed-form
// Gaussian integrals behind them. All sigma' constants use the step 1{x > 0}.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "anisim/hermite.hpp"
#include "anisim/sim_model.hpp"

namespace anisim {

struct PopulationParams {
  std::vector<double> drift_coeffs;  // d_l = c_l b_l, index l
  int k_star = 1;
  double eta_tilde = 0.0;
  double lambda = 1.0;
  double lambda_prime = 0.0;
};

// Effective step of the linearized recursion: the leading drift term
// eta lambda |d_{k*-1}| / ||Q^{1/2} w0||.
inline double eta_tilde_for(const LinkFunction& link, double eta, double lambda, double q_norm_w0) {
  if (!(q_norm_w0 > 0.0)) throw std::invalid_argument("eta_tilde_for: q_norm_w0 must be positive");
  const std::vector<double> d = drift_series(link.coeffs());
  const std::size_t lead = static_cast<std::size_t>(link.k_star() - 1);
  const double dl = lead < d.size() ? d[lead] : 0.0;
  return eta * lambda * std::abs(dl) / q_norm_w0;
}

inline PopulationParams make_population_params(const LinkFunction& link, double eta_tilde, double lambda,
                                               double lambda_prime) {
  PopulationParams p;
  p.drift_coeffs = drift_series(link.coeffs());
  p.k_star = link.k_star();
  p.eta_tilde = eta_tilde;
  p.lambda = lambda;
  p.lambda_prime = lambda_prime;
  return p;
}

inline constexpr int kDefaultDriftTruncation = 40;

// lambda sum_{l = k*-1}^{truncation} d_l m^l, i.e. lambda E[z* f(z*) sigma'(z_t)]
// when corr(z*, z_t) = m.
inline double population_drift(double m, const PopulationParams& params, int truncation = kDefaultDriftTruncation) {
  if (!(m > 0.0 && m < 1.0)) throw std::invalid_argument("population_drift: m must lie in (0, 1)");
  const int lo = std::max(0, params.k_star - 1);
  const int hi = std::min(truncation, static_cast<int>(params.drift_coeffs.size()) - 1);
  double s = 0.0;
  for (int l = hi; l >= lo; --l) s = s * m + params.drift_coeffs[static_cast<std::size_t>(l)];
  return params.lambda * s * std::pow(m, lo);
}

struct RecursionResult {
  std::vector<double> trajectory;  // m_0 .. m_{max_steps}
  std::optional<std::int64_t> hit_time;
};

// m_{t+1} = min(1, m_t + eta_tilde m_t^{k*-1}).
inline RecursionResult population_recursion(double m0, double eta_tilde, int k_star, std::int64_t max_steps,
                                            double target) {
  if (!(m0 > 0.0 && m0 < 1.0)) throw std::invalid_argument("population_recursion: m0 must lie in (0, 1)");
  if (!(target > m0 && target <= 1.0)) throw std::invalid_argument("population_recursion: target must lie in (m0, 1]");
  if (k_star < 1) throw std::invalid_argument("population_recursion: k_star must be >= 1");
  if (max_steps < 0) throw std::invalid_argument("population_recursion: max_steps must be >= 0");
  RecursionResult r;
  r.trajectory.reserve(static_cast<std::size_t>(max_steps) + 1);
  double m = m0;
  r.trajectory.push_back(m);
  for (std::int64_t t = 1; t <= max_steps; ++t) {
    m = std::min(1.0, m + eta_tilde * std::pow(m, k_star - 1));
    r.trajectory.push_back(m);
    if (!r.hit_time && m >= target) r.hit_time = t;
  }
  return r;
}

// Time for the ODE m' = eta_tilde m^{k*-1} to go from m0 to target.
inline double escape_time_estimate(double m0, double eta_tilde, int k_star, double target) {
  if (!(m0 > 0.0 && m0 < 1.0)) throw std::invalid_argument("escape_time_estimate: m0 must lie in (0, 1)");
  if (!(target > m0 && target <= 1.0)) throw std::invalid_argument("escape_time_estimate: target must lie in (m0, 1]");
  if (!(eta_tilde > 0.0)) throw std::invalid_argument("escape_time_estimate: eta_tilde must be positive");
  if (k_star < 1) throw std::invalid_argument("escape_time_estimate: k_star must be >= 1");
  if (k_star == 1) return (target - m0) / eta_tilde;
  if (k_star == 2) return std::log(target / m0) / eta_tilde;
  const double e = 2.0 - k_star;
  return (std::pow(m0, e) - std::pow(target, e)) / ((k_star - 2) * eta_tilde);
}

// E_Y[1{pX + sqrt(1-p^2) Y > 0} Y] = exp(-p^2 x^2 / (2 (1 - p^2))) / sqrt(2 pi).
inline double gauss_int1(double p, double x) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("gauss_int1: p must lie in [0, 1)");
  return std::exp(-p * p * x * x / (2.0 * (1.0 - p * p))) / std::sqrt(2.0 * std::numbers::pi);
}

// E_X[f(X) exp(-c X^2)] = E_X[f(X / sqrt(2c+1))] / sqrt(2c+1). The left side is
// integrated by quadrature, the right from the scaled Hermite expansion; they
// must agree.
inline double gauss_int2(const HermiteCoeffs& a, double c) {
  if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("gauss_int2: c must be finite and >= 0");
  const GaussHermiteRule rule = gauss_hermite_rule(2 * a.max_degree() + 64);
  double left = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double x = rule.nodes[i];
    left += rule.weights[i] * a.evaluate(x) * std::exp(-c * x * x);
  }
  const double s = std::sqrt(2.0 * c + 1.0);
  const double right = gaussian_mean_scaled(a, 1.0 / s) / s;
  if (std::abs(left - right) > 1e-8 * std::max(1.0, std::abs(right))) {
    throw std::logic_error("gauss_int2: quadrature and scaled expansion disagree");
  }
  return right;
}

// E[f(z*) sigma'(z_t) u] where z_t = m z* + sqrt(1-m^2) z_perp and u has
// correlation q_t with z_perp and none with z*:
//   q_t / sqrt(2 pi (2p+1)) E f(Z / sqrt(2p+1)),  p = m^2 / (2 (1 - m^2)).
inline double g2_magnitude(double m, double q_t, const LinkFunction& link) {
  if (!(std::abs(m) < 1.0)) throw std::invalid_argument("g2_magnitude: |m| must be < 1");
  const double p = m * m / (2.0 * (1.0 - m * m));
  const double s = std::sqrt(2.0 * p + 1.0);
  const HermiteCoeffs& a = link.coeffs();
  // H_0 projection of each scaled basis element.
  double mean = 0.0;
  for (int n = 0; n <= a.max_degree(); n += 2) {
    if (a[n] == 0.0) continue;
    const auto expansion = hermite_scale_expand(n, 1.0 / s);
    mean += a[n] * expansion.at(0) / std::sqrt(std::tgamma(n + 1.0));
  }
  return q_t / (std::sqrt(2.0 * std::numbers::pi) * s) * mean;
}

}  // namespace anisim
