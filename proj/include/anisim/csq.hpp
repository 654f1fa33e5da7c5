#pragma once

// Nearly Q-orthogonal random families and the tolerance bounds of the
// correlational statistical query lower bound.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "anisim/covariance.hpp"
#include "anisim/rng.hpp"

namespace anisim {

struct CsqFamilyReport {
  std::int64_t family_size = 0;
  std::int64_t dim = 0;
  double max_pairwise_q_corr = 0.0;
  double min_q_norm_sq = 0.0;
  double epsilon_bound = std::numeric_limits<double>::quiet_NaN();  // NaN when not applicable
  double v = 0.0;
  // max_pairwise_q_corr / (v sqrt(log p)): the absorbed constant.
  double multiplier = 0.0;
};

// v = min(||Q||_F / ||Q^{1/2}||_F^2, 1/sqrt(d)).
inline double csq_v(const CovarianceSpec& q) {
  return std::min(q.frobenius() / q.trace(), 1.0 / std::sqrt(static_cast<double>(q.dim())));
}

struct EpsilonBound {
  bool applicable = false;
  double epsilon = std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  double log_argument = 0.0;  // q v^{k/2}
  // ||Q^{1/2}||_F^2 >= ||Q||_F sqrt(log d)
  bool regime_ok = false;
};

// epsilon = v sqrt(log(q v^{k/2})); not applicable when the log argument is <= 1.
inline EpsilonBound epsilon_bound(const CovarianceSpec& q, double q_queries, int k) {
  if (k < 1) throw std::invalid_argument("epsilon_bound: k must be >= 1");
  if (!(q_queries > 0.0)) throw std::invalid_argument("epsilon_bound: q_queries must be positive");
  EpsilonBound b;
  b.v = csq_v(q);
  b.log_argument = q_queries * std::pow(b.v, 0.5 * k);
  b.regime_ok = q.trace() >= q.frobenius() * std::sqrt(std::log(static_cast<double>(q.dim())));
  if (b.log_argument > 1.0) {
    b.applicable = true;
    b.epsilon = b.v * std::sqrt(std::log(b.log_argument));
  }
  return b;
}

// tau^2 <= epsilon^{k/2}.
inline double csq_tolerance(double epsilon, int k) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::invalid_argument("csq_tolerance: epsilon must lie in (0, 1]");
  if (k < 1) throw std::invalid_argument("csq_tolerance: k must be >= 1");
  return std::pow(epsilon, 0.5 * k);
}

struct SampleComplexity {
  double tau_sq = 0.0;
  double n_tau_sq = 0.0;      // tau^2 = 1/n, n = eps^{-k/2}
  double n_tau_fourth = 0.0;  // tau = 1/sqrt(n) read as tau^2 = 1/sqrt(n), n = eps^{-k}
  double displayed = 0.0;     // log(d)^{k/2} d (||Q||_F / ||Q^{1/2}||_F^2)^{k/2}
};

inline SampleComplexity sample_complexity_heuristic(const CovarianceSpec& q, int k, double q_queries) {
  const EpsilonBound b = epsilon_bound(q, q_queries, k);
  if (!b.applicable) throw std::domain_error("sample_complexity_heuristic: epsilon bound not applicable");
  SampleComplexity s;
  s.tau_sq = csq_tolerance(std::min(b.epsilon, 1.0), k);
  s.n_tau_sq = 1.0 / s.tau_sq;
  s.n_tau_fourth = s.n_tau_sq * s.n_tau_sq;
  const double d = static_cast<double>(q.dim());
  s.displayed = std::pow(std::log(d), 0.5 * k) * d * std::pow(q.frobenius() / q.trace(), 0.5 * k);
  return s;
}

namespace detail {

inline constexpr Eigen::Index kCsqBlock = 256;

}  // namespace detail

// Draws p standard Gaussian vectors and scans all normalized pairwise
// Q-correlations block by block with a running max; the p x p Gram matrix is
// never formed. The epsilon bound is evaluated at q = p^2 with k = 2.
inline CsqFamilyReport build_family(const CovarianceSpec& q, std::int64_t p, Rng& rng, int workers = 1) {
  if (p < 2) throw std::invalid_argument("build_family: p must be >= 2");
  const Eigen::Index d = q.dim();
  Eigen::MatrixXd u(d, p);
  double min_norm_sq = std::numeric_limits<double>::infinity();
  Eigen::VectorXd g(d);
  Eigen::VectorXd col(d);
  for (std::int64_t i = 0; i < p; ++i) {
    rng.fill_normal(g);
    q.apply_q_sqrt(g, col);
    const double n2 = col.squaredNorm();
    min_norm_sq = std::min(min_norm_sq, n2);
    u.col(i) = col / std::sqrt(n2);
  }

  const Eigen::Index nb = (p + detail::kCsqBlock - 1) / detail::kCsqBlock;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> tasks;
  for (Eigen::Index a = 0; a < nb; ++a) {
    for (Eigen::Index b = a; b < nb; ++b) tasks.emplace_back(a, b);
  }
  auto scan = [&](std::size_t lo, std::size_t step) {
    double best = 0.0;
    Eigen::MatrixXd gram;
    for (std::size_t t = lo; t < tasks.size(); t += step) {
      const auto [a, b] = tasks[t];
      const Eigen::Index a0 = a * detail::kCsqBlock;
      const Eigen::Index b0 = b * detail::kCsqBlock;
      const Eigen::Index na = std::min<Eigen::Index>(detail::kCsqBlock, p - a0);
      const Eigen::Index nbk = std::min<Eigen::Index>(detail::kCsqBlock, p - b0);
      gram.noalias() = u.middleCols(a0, na).transpose() * u.middleCols(b0, nbk);
      for (Eigen::Index j = 0; j < nbk; ++j) {
        for (Eigen::Index i = 0; i < na; ++i) {
          if (a == b && i >= j) continue;
          best = std::max(best, std::abs(gram(i, j)));
        }
      }
    }
    return best;
  };

  double max_corr = 0.0;
  if (workers <= 1) {
    max_corr = scan(0, 1);
  } else {
    std::vector<double> partial(static_cast<std::size_t>(workers), 0.0);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] { partial[static_cast<std::size_t>(w)] = scan(static_cast<std::size_t>(w), static_cast<std::size_t>(workers)); });
    }
    for (auto& t : pool) t.join();
    max_corr = *std::max_element(partial.begin(), partial.end());
  }

  CsqFamilyReport r;
  r.family_size = p;
  r.dim = d;
  r.max_pairwise_q_corr = std::min(max_corr, 1.0);
  r.min_q_norm_sq = min_norm_sq;
  const EpsilonBound b = epsilon_bound(q, static_cast<double>(p) * static_cast<double>(p), 2);
  r.v = b.v;
  r.epsilon_bound = b.epsilon;
  r.multiplier = r.max_pairwise_q_corr / (b.v * std::sqrt(std::log(static_cast<double>(p))));
  return r;
}

}  // namespace anisim
