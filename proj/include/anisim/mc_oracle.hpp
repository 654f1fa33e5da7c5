#pragma once

// Plain Monte-Carlo estimates of Gaussian expectations with standard errors.
// Used as the independent check for every closed-form identity.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "anisim/rng.hpp"

namespace anisim {

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t n_samples = 0;

  // |mean - target| in units of std_error.
  double z_score(double target) const {
    if (std_error == 0.0) return mean == target ? 0.0 : INFINITY;
    return std::abs(mean - target) / std_error;
  }
  bool within(double target, double n_sigma) const { return std::abs(mean - target) <= n_sigma * std_error; }
};

using GaussianFunctional = std::function<double(std::span<const double>)>;

namespace detail {

struct Moments {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
};

// Chan et al. pairwise merge of (count, mean, M2).
inline Moments merge(const Moments& a, const Moments& b) {
  if (a.n == 0) return b;
  if (b.n == 0) return a;
  Moments out;
  out.n = a.n + b.n;
  const double delta = b.mean - a.mean;
  out.mean = a.mean + delta * static_cast<double>(b.n) / static_cast<double>(out.n);
  out.m2 = a.m2 + b.m2 + delta * delta * static_cast<double>(a.n) * static_cast<double>(b.n) / static_cast<double>(out.n);
  return out;
}

inline Moments accumulate(const GaussianFunctional& g, int arity, std::int64_t n, Rng& rng) {
  std::vector<double> z(static_cast<std::size_t>(arity));
  Moments m;
  for (std::int64_t i = 0; i < n; ++i) {
    for (double& v : z) v = rng.normal();
    const double val = g(z);
    if (!std::isfinite(val)) throw std::domain_error("mc_oracle: functional returned a non-finite value");
    ++m.n;
    const double delta = val - m.mean;
    m.mean += delta / static_cast<double>(m.n);
    m.m2 += delta * (val - m.mean);
  }
  return m;
}

inline McEstimate finish(const Moments& m) {
  McEstimate e;
  e.mean = m.mean;
  e.n_samples = m.n;
  const double var = m.n > 1 ? m.m2 / static_cast<double>(m.n - 1) : 0.0;
  e.std_error = std::sqrt(var / static_cast<double>(m.n));
  return e;
}

}  // namespace detail

// E[g(Z_1, ..., Z_arity)] for i.i.d. standard Gaussians.
inline McEstimate estimate(const GaussianFunctional& g, int arity, std::int64_t n_samples, Rng& rng) {
  if (n_samples < 2) throw std::invalid_argument("mc_oracle: n_samples must be >= 2");
  if (arity < 1) throw std::invalid_argument("mc_oracle: arity must be >= 1");
  return detail::finish(detail::accumulate(g, arity, n_samples, rng));
}

// Same estimate split into `shards` streams seeded from `seed`. Shards run on
// up to `workers` threads and merge in shard order, so the result depends on
// (seed, shards) only.
inline McEstimate estimate_sharded(const GaussianFunctional& g, int arity, std::int64_t n_samples, std::uint64_t seed,
                                   int shards, int workers = 0) {
  if (n_samples < 2) throw std::invalid_argument("mc_oracle: n_samples must be >= 2");
  if (shards < 1) throw std::invalid_argument("mc_oracle: shards must be >= 1");
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const auto seeds = derive_seeds(seed, static_cast<std::size_t>(shards));
  std::vector<detail::Moments> parts(static_cast<std::size_t>(shards));
  auto run_shard = [&](int s) {
    const std::int64_t lo = n_samples * s / shards;
    const std::int64_t hi = n_samples * (s + 1) / shards;
    Rng rng(seeds[static_cast<std::size_t>(s)]);
    parts[static_cast<std::size_t>(s)] = detail::accumulate(g, arity, hi - lo, rng);
  };
  if (workers == 1) {
    for (int s = 0; s < shards; ++s) run_shard(s);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int s = w; s < shards; s += workers) run_shard(s);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  detail::Moments total;
  for (const auto& p : parts) total = detail::merge(total, p);
  return detail::finish(total);
}

// (z, rho z + sqrt(1 - rho^2) z') from two independent standard Gaussians.
inline std::pair<double, double> correlated_pair(double z, double z_prime, double rho) {
  return {z, rho * z + std::sqrt(std::max(0.0, 1.0 - rho * rho)) * z_prime};
}

}  // namespace anisim
