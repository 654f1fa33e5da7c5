#pragma once

// Named validation suites. Each check reports the measured value next to its
// threshold; the CLI `validate` command and the acceptance binary share them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "anisim/covariance.hpp"
#include "anisim/csq.hpp"
#include "anisim/experiments.hpp"
#include "anisim/hermite.hpp"
#include "anisim/mc_oracle.hpp"
#include "anisim/population.hpp"
#include "anisim/rng.hpp"
#include "anisim/sim_model.hpp"
#include "anisim/trainers.hpp"

namespace anisim {

struct Check {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  std::string relation;  // how measured compares to threshold when passing
  double threshold = 0.0;
  std::string note;
};

inline Check make_check(std::string name, double measured, std::string relation, double threshold, std::string note = {}) {
  Check c{std::move(name), false, measured, std::move(relation), threshold, std::move(note)};
  if (c.relation == "<=") {
    c.passed = measured <= threshold;
  } else if (c.relation == "<") {
    c.passed = measured < threshold;
  } else if (c.relation == ">=") {
    c.passed = measured >= threshold;
  } else if (c.relation == ">") {
    c.passed = measured > threshold;
  } else {
    throw std::invalid_argument("make_check: unknown relation " + c.relation);
  }
  return c;
}

inline void print_check(std::ostream& os, const Check& c) {
  std::ostringstream line;
  line << (c.passed ? "PASS " : "FAIL ") << c.name << " measured=" << std::setprecision(6) << c.measured << ' '
       << c.relation << ' ' << c.threshold;
  if (!c.note.empty()) line << "  " << c.note;
  os << line.str() << '\n';
}

inline bool all_passed(const std::vector<Check>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

namespace detail {

inline std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

// Tolerance for estimates of constants, where the standard error is zero.
inline double z_gap(const McEstimate& e, double target) {
  const double gap = std::abs(e.mean - target);
  if (gap <= 1e-12) return 0.0;
  return e.std_error > 0.0 ? gap / e.std_error : INFINITY;
}

inline std::vector<double> orthonormal(int degree) {
  std::vector<double> a(static_cast<std::size_t>(degree) + 1, 0.0);
  a.back() = 1.0;
  return a;
}

}  // namespace detail

// ----------------------------------------------------------------- hermite

inline std::vector<Check> suite_hermite(std::int64_t mc_samples = 1'000'000) {
  std::vector<Check> out;

  // E[H_n(U) H_m(V)] against Monte Carlo.
  double worst_z = 0.0;
  std::string worst;
  std::uint64_t seed = 100;
  for (double rho : {0.0, 0.3, 0.9, -0.7}) {
    for (int n = 0; n <= 4; ++n) {
      for (int m = 0; m <= 4; ++m) {
        Rng rng(seed++);
        const auto est = estimate(
            [n, m, rho](std::span<const double> z) {
              const auto [u, v] = correlated_pair(z[0], z[1], rho);
              return hermite(n, u) * hermite(m, v);
            },
            2, mc_samples, rng);
        const double z = detail::z_gap(est, correlated_hermite_expectation(n, m, rho));
        if (z > worst_z) {
          worst_z = z;
          worst = "n=" + std::to_string(n) + " m=" + std::to_string(m) + " rho=" + detail::fmt(rho);
        }
      }
    }
  }
  out.push_back(make_check("hermite.correlated_vs_mc_max_z", worst_z, "<=", 4.0,
                           "100 cases, " + std::to_string(mc_samples) + " samples each; worst at " + worst));

  // Orthonormality by quadrature.
  const GaussHermiteRule rule = gauss_hermite_rule(64);
  std::vector<double> h(11);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(11, 11);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    hermite_normalized_all(rule.nodes[i], h);
    for (int a = 0; a <= 10; ++a) {
      for (int b = 0; b <= 10; ++b) gram(a, b) += rule.weights[i] * h[static_cast<std::size_t>(a)] * h[static_cast<std::size_t>(b)];
    }
  }
  out.push_back(make_check("hermite.orthonormality_max_err", (gram - Eigen::MatrixXd::Identity(11, 11)).cwiseAbs().maxCoeff(),
                           "<=", 1e-9, "n, m <= 10"));

  // Scaling expansion evaluated pointwise.
  Rng rng(7);
  double worst_rel = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const double x = -3.0 + 6.0 * rng.uniform();
    const double gamma = 0.2 + 1.6 * rng.uniform();
    for (int n = 0; n <= 8; ++n) {
      double synth = 0.0;
      for (const auto& [deg, coef] : hermite_scale_expand(n, gamma)) synth += coef * hermite(deg, x);
      const double exact = hermite(n, gamma * x);
      worst_rel = std::max(worst_rel, std::abs(synth - exact) / std::max(1.0, std::abs(exact)));
    }
  }
  out.push_back(make_check("hermite.scale_expand_max_rel_err", worst_rel, "<=", 1e-9, "50 (x, gamma) pairs, n <= 8"));

  // Three-term recurrence.
  double worst_rec = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double x = -5.0 + 10.0 * rng.uniform();
    for (int n = 1; n <= 12; ++n) {
      const double lhs = hermite(n + 1, x);
      worst_rec = std::max(worst_rec, std::abs(lhs - x * hermite(n, x) + n * hermite(n - 1, x)) / (1.0 + std::abs(lhs)));
    }
  }
  out.push_back(make_check("hermite.recurrence_max_residual", worst_rec, "<=", 1e-9));

  // Coefficient round trip.
  double worst_rt = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(9);
    for (double& v : a) v = rng.normal();
    const HermiteCoeffs c(a);
    const HermiteCoeffs back = hermite_coeffs_of([&](double x) { return c.evaluate(x); }, 8);
    for (int k = 0; k <= 8; ++k) worst_rt = std::max(worst_rt, std::abs(back[k] - c[k]));
  }
  out.push_back(make_check("hermite.round_trip_max_err", worst_rt, "<=", 1e-9, "20 random degree-8 expansions"));
  return out;
}

// ----------------------------------------------------------------- gauss

inline std::vector<Check> suite_gauss(std::int64_t int1_samples = 10'000'000, std::int64_t int2_samples = 1'000'000) {
  std::vector<Check> out;
  const std::vector<std::pair<double, double>> int1_points = {{0.0, 0.7}, {0.3, 1.0}, {0.6, 1.0}, {0.9, 0.5}, {0.5, -2.0}};
  std::uint64_t seed = 200;
  for (const auto& [p, x] : int1_points) {
    Rng rng(seed++);
    const double q = std::sqrt(1.0 - p * p);
    const auto est = estimate([p = p, x = x, q](std::span<const double> z) { return (p * x + q * z[0] > 0.0) ? z[0] : 0.0; },
                              1, int1_samples, rng);
    const double closed = gauss_int1(p, x);
    out.push_back(make_check("gauss.int1(p=" + detail::fmt(p) + ",x=" + detail::fmt(x) + ")_z", detail::z_gap(est, closed),
                             "<=", 4.0, "closed=" + detail::fmt(closed, 8) + " mc=" + detail::fmt(est.mean, 8)));
  }

  const std::vector<std::pair<std::vector<double>, double>> int2_points = {
      {{1.0}, 0.7},
      {{0.0, 0.0, 1.0}, 0.5},
      {{0.0, 0.6, 0.0, 0.8}, 1.0},
      {{0.2, 0.0, 0.5, 0.0, 0.4}, 0.25},
      {{0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0}, 2.0}};
  for (std::size_t i = 0; i < int2_points.size(); ++i) {
    const HermiteCoeffs a(int2_points[i].first);
    const double c = int2_points[i].second;
    Rng rng(seed++);
    const auto est = estimate([&a, c](std::span<const double> z) { return a.evaluate(z[0]) * std::exp(-c * z[0] * z[0]); }, 1,
                              int2_samples, rng);
    const double closed = gauss_int2(a, c);
    out.push_back(make_check("gauss.int2(case=" + std::to_string(i) + ",c=" + detail::fmt(c) + ")_z", detail::z_gap(est, closed),
                             "<=", 4.0, "closed=" + detail::fmt(closed, 8) + " mc=" + detail::fmt(est.mean, 8)));
  }
  return out;
}

// ----------------------------------------------------------------- drift

inline std::vector<Check> suite_drift(std::int64_t mc_samples = 1'000'000) {
  std::vector<Check> out;
  const std::vector<std::pair<std::string, LinkFunction>> links = {
      {"hermite_2", LinkFunction::hermite(2)}, {"hermite_3", LinkFunction::hermite(3)}, {"sign", LinkFunction::sign()}};
  std::uint64_t seed = 300;
  for (const auto& [name, link] : links) {
    const PopulationParams params = make_population_params(link, 1.0, 1.0, 0.0);
    for (double m : {0.05, 0.1, 0.2}) {
      Rng rng(seed++);
      const double q = std::sqrt(1.0 - m * m);
      const auto est = estimate(
          [&link = link, m, q](std::span<const double> z) {
            const double zt = m * z[0] + q * z[1];
            return zt > 0.0 ? z[0] * link(z[0]) : 0.0;
          },
          2, mc_samples, rng);
      const double closed = population_drift(m, params);
      out.push_back(make_check("drift." + name + "(m=" + detail::fmt(m) + ")_z", detail::z_gap(est, closed), "<=", 4.0,
                               "series=" + detail::fmt(closed, 8) + " mc=" + detail::fmt(est.mean, 8)));
    }
  }
  return out;
}

// ----------------------------------------------------------------- init

inline std::vector<Check> suite_init(int draws = 10'000) {
  std::vector<Check> out;
  const Eigen::Index d = 500;
  const Eigen::VectorXd ws = Eigen::VectorXd::Unit(d, 0);
  const std::vector<std::pair<std::string, CovarianceSpec>> specs = {{"identity500", CovarianceSpec::identity(d)},
                                                                     {"spiked500_k6", CovarianceSpec::spiked(d, 6.0, ws)}};
  std::uint64_t seed = 400;
  for (const auto& [name, cov] : specs) {
    const SimInstance inst = make_instance(cov, ws, LinkFunction::hermite(2));
    Rng rng(seed++);
    int positive = 0;
    std::vector<double> mags;
    mags.reserve(static_cast<std::size_t>(draws));
    for (int i = 0; i < draws; ++i) {
      const double m0 = overlap(inst, init_weights(inst, 1.0, rng));
      if (m0 > 0.0) ++positive;
      mags.push_back(std::abs(m0));
    }
    const double frac = static_cast<double>(positive) / draws;
    out.push_back(make_check("init." + name + ".|P(m0>0)-0.5|", std::abs(frac - 0.5), "<=", 0.02, "P=" + detail::fmt(frac)));
    const double ratio = median(mags) / inst.stats.typical_m0;
    const double log_gap = std::abs(std::log(ratio));
    out.push_back(make_check("init." + name + ".|log(median|m0|/typical)|", log_gap, "<=", std::log(3.0),
                             "median=" + detail::fmt(median(mags)) + " typical=" + detail::fmt(inst.stats.typical_m0)));
  }
  return out;
}

// ----------------------------------------------------------------- csq

inline std::vector<Check> suite_csq(int runs = 20, std::int64_t p = 1000) {
  std::vector<Check> out;
  const Eigen::Index d = 2000;
  const std::vector<std::pair<std::string, CovarianceSpec>> specs = {
      {"identity2000", CovarianceSpec::identity(d)}, {"spiked2000_k6", CovarianceSpec::spiked(d, 6.0, Eigen::VectorXd::Unit(d, 0))}};
  for (const auto& [name, cov] : specs) {
    int below = 0;
    int norm_ok = 0;
    double worst_mult = 0.0;
    double bound = 0.0;
    double worst_eps = 0.0;
    for (int r = 0; r < runs; ++r) {
      Rng rng(500 + static_cast<std::uint64_t>(r));
      const CsqFamilyReport rep = build_family(cov, p, rng);
      bound = rep.epsilon_bound;
      if (rep.max_pairwise_q_corr <= rep.epsilon_bound) ++below;
      if (rep.min_q_norm_sq >= 0.5 * cov.trace()) ++norm_ok;
      worst_mult = std::max(worst_mult, rep.multiplier);
      worst_eps = std::max(worst_eps, rep.max_pairwise_q_corr);
    }
    out.push_back(make_check("csq." + name + ".frac_eps_hat_below_bound", static_cast<double>(below) / runs, ">=", 0.9,
                             "bound=" + detail::fmt(bound) + " max eps_hat=" + detail::fmt(worst_eps) +
                                 " max multiplier=" + detail::fmt(worst_mult)));
    out.push_back(make_check("csq." + name + ".frac_min_qnorm_above_half_trace", static_cast<double>(norm_ok) / runs, ">=", 0.95));
  }
  return out;
}

// ----------------------------------------------------------------- norm stability

inline std::vector<Check> suite_norm_stability(int seeds = 20) {
  json cfg = preset_json("theorem1-iso");
  cfg["seeds"] = {{"count", seeds}, {"start", 1}};
  const ExperimentConfig ec = parse_config(cfg);
  const SimInstance inst = build_instance(ec.instance);
  const auto results = run_seeds(inst, ec.trainer, ec.seeds, ec.threads);
  double lo = INFINITY;
  double hi = 0.0;
  std::size_t points = 0;
  for (const auto& r : results) {
    const auto& rec = r.record;
    for (std::size_t i = 0; i < rec.times.size(); ++i) {
      if (rec.alignment(rec.m_t[i]) > 0.3) continue;
      const double ratio = rec.q_norm_w[i] / rec.q_norm_w[0];
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
      ++points;
    }
  }
  const std::string note = std::to_string(points) + " search-phase points over " + std::to_string(seeds) + " seeds, T=" +
                           std::to_string(results.front().config.steps) + " (seed 1)";
  return {make_check("norm.min_ratio", lo, ">=", 0.5, note), make_check("norm.max_ratio", hi, "<=", 1.5)};
}

// ----------------------------------------------------------------- population match

inline std::vector<Check> suite_population_match(int seeds = 50, std::int64_t record_every = 100) {
  json cfg = preset_json("theorem1-iso");
  cfg["name"] = "population-match";
  cfg["instance"]["covariance"]["d"] = 200;
  cfg["trainer"]["record_every"] = record_every;
  cfg["seeds"] = {{"count", seeds}, {"start", 1}};
  const ExperimentConfig ec = parse_config(cfg);
  const SimInstance inst = build_instance(ec.instance);
  const auto results = run_seeds(inst, ec.trainer, ec.seeds, ec.threads);

  std::size_t rows = SIZE_MAX;
  std::vector<std::vector<double>> pop;
  for (const auto& r : results) {
    rows = std::min(rows, r.record.times.size());
    const double m0 = std::abs(r.record.m0);
    const double q0 = r.config.init_scale_cr * inst.q_sqrt_w_star_norm;
    const double et = eta_tilde_for(inst.link, r.config.eta0, inst.stats.lambda, q0);
    const auto rec = population_recursion(m0, et, inst.link.k_star(), r.config.steps, 1.0);
    std::vector<double> sampled;
    for (std::int64_t t : r.record.times) sampled.push_back(rec.trajectory[static_cast<std::size_t>(t)]);
    pop.push_back(std::move(sampled));
  }
  double worst = 0.0;
  std::size_t compared = 0;
  double last_mean = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    double sgd = 0.0;
    double model = 0.0;
    for (std::size_t s = 0; s < results.size(); ++s) {
      sgd += results[s].record.alignment(results[s].record.m_t[i]);
      model += pop[s][i];
    }
    sgd /= static_cast<double>(results.size());
    model /= static_cast<double>(results.size());
    if (sgd > 0.3) break;
    worst = std::max(worst, std::abs(sgd - model) / model);
    last_mean = sgd;
    ++compared;
  }
  return {make_check("population.max_rel_err", worst, "<=", 0.2,
                     std::to_string(compared) + " time points, mean m_t reached " + detail::fmt(last_mean))};
}

// ----------------------------------------------------------------- experiments

inline std::vector<Check> suite_fig1() {
  const RunSummary aniso = run_experiment(parse_config(preset_json("fig1-aniso")));
  const RunSummary iso = run_experiment(parse_config(preset_json("fig1-iso")));
  std::size_t slower = 0;
  for (std::size_t i = 0; i < aniso.results.size(); ++i) {
    if (escape_or_inf(iso.results[i].record) > escape_or_inf(aniso.results[i].record)) ++slower;
  }
  const double n = static_cast<double>(aniso.results.size());
  return {make_check("fig1.aniso_median_final_m", aniso.median_final_alignment, ">=", 0.8),
          make_check("fig1.frac_iso_escape_strictly_later", static_cast<double>(slower) / n, ">=", 0.9,
                     "aniso median escape=" + (aniso.median_escape_time ? detail::fmt(*aniso.median_escape_time) : "none") +
                         " iso median escape=" + (iso.median_escape_time ? detail::fmt(*iso.median_escape_time) : "none"))};
}

inline std::vector<Check> suite_fig2() {
  const CompareSummary c = compare_variants(parse_config(preset_json("fig2")));
  return {make_check("fig2.|mean_final_diff|", std::abs(c.paired.front().mean_final_diff), "<=", 0.15,
                     "vanilla median=" + detail::fmt(c.runs[0].median_final_alignment) +
                         " spherical median=" + detail::fmt(c.runs[1].median_final_alignment))};
}

inline std::vector<Check> suite_repsgd() {
  const CompareSummary c = compare_variants(parse_config(preset_json("repsgd")));
  return {make_check("repsgd.rep_median_final_m", c.runs[1].median_final_alignment, ">=", 0.5),
          make_check("repsgd.vanilla_median_final_m", c.runs[0].median_final_alignment, "<", 0.3)};
}

inline std::vector<Check> suite_adaptive_lr() {
  const CompareSummary c = compare_variants(parse_config(preset_json("adaptive-lr")));
  const auto& p = c.paired.front();
  return {make_check("adaptive.earlier_count", static_cast<double>(p.earlier_count), ">", 0.5 * static_cast<double>(p.per_seed.size()),
                     "of " + std::to_string(p.per_seed.size()) + " paired seeds")};
}

// Vanilla SGD on H_3 with the same step at d = 100 and d = 200. The step and
// horizon come from the k* >= 3 schedule at d = 100 with the typical m0.
inline std::vector<Check> suite_escape_scaling(int seeds = 20) {
  std::vector<double> medians;
  std::string note;
  double eta = 0.0;
  std::int64_t steps = 0;
  for (int d : {100, 200}) {
    json cfg = {{"name", "escape-scaling"},
                {"instance", {{"covariance", {{"type", "identity"}, {"d", d}}}, {"link", {{"type", "hermite"}, {"degree", 3}}}}},
                {"seeds", {{"count", seeds}, {"start", 1}}}};
    if (d == 100) {
      const SimInstance probe = build_instance(cfg["instance"]);
      const Schedule s = theorem1_schedule(3, probe.stats.typical_m0, probe.stats.theta_ratio, 0.1);
      eta = s.eta;
      steps = s.steps;
    }
    cfg["trainer"] = {{"eta0", eta}, {"steps", steps}, {"init_scale_cr", 1.0}, {"record_every", 10000}};
    const RunSummary s = run_experiment(parse_config(cfg));
    medians.push_back(s.median_escape_time ? *s.median_escape_time : INFINITY);
    note += "d=" + std::to_string(d) + ": escaped " + detail::fmt(s.escaped_fraction) + ", median final m " +
            detail::fmt(s.median_final_alignment) + "; ";
  }
  const SimInstance h3 = build_instance({{"covariance", {{"type", "identity"}, {"d", 100}}}, {"link", {{"type", "hermite"}, {"degree", 3}}}});
  note += "eta=" + detail::fmt(eta) + " T=" + std::to_string(steps) +
          " eta_tilde=" + detail::fmt(eta_tilde_for(h3.link, eta, 1.0, 1.0));
  const double ratio = (std::isfinite(medians[0]) && std::isfinite(medians[1])) ? medians[1] / medians[0] : NAN;
  Check lo = make_check("escape.ratio_d200_d100", ratio, ">=", 2.5, note);
  Check hi = make_check("escape.ratio_d200_d100", ratio, "<=", 7.0);
  return {lo, hi};
}

using SuiteFn = std::function<std::vector<Check>()>;

inline const std::map<std::string, SuiteFn>& suites() {
  static const std::map<std::string, SuiteFn> s = {
      {"hermite", [] { return suite_hermite(); }},
      {"gauss", [] { return suite_gauss(); }},
      {"drift", [] { return suite_drift(); }},
      {"population-match", [] { return suite_population_match(); }},
      {"norm-stability", [] { return suite_norm_stability(); }},
      {"csq", [] { return suite_csq(); }},
      {"init", [] { return suite_init(); }},
      {"fig1", [] { return suite_fig1(); }},
      {"fig2", [] { return suite_fig2(); }},
      {"escape-scaling", [] { return suite_escape_scaling(); }},
      {"repsgd", [] { return suite_repsgd(); }},
      {"adaptive-lr", [] { return suite_adaptive_lr(); }},
  };
  return s;
}

}  // namespace anisim
