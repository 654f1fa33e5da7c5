#pragma once

// JSON-configured experiments: instance construction, seeded multi-trajectory
// runs, paired variant comparison, CSV/summary output and SVG plots.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "anisim/covariance.hpp"
#include "anisim/rng.hpp"
#include "anisim/sim_model.hpp"
#include "anisim/trainers.hpp"

namespace anisim {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A trajectory failure tagged with the position of its seed in the config.
class SeedError : public std::runtime_error {
 public:
  SeedError(std::size_t index, std::uint64_t seed, const std::string& what)
      : std::runtime_error("seed #" + std::to_string(index) + " (" + std::to_string(seed) + "): " + what),
        index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

enum class ScheduleKind { Fixed, Theorem1 };

struct TrainerSpec {
  std::string label;
  TrainerConfig base;
  ScheduleKind schedule = ScheduleKind::Fixed;
  double eps_d = 0.1;
  std::optional<double> label_sign;  // empty: taken from the coefficient assumption check
};

struct OutputSpec {
  std::string csv = "trajectories.csv";
  std::string summary = "summary.json";
  std::optional<std::string> svg;
};

struct ExperimentConfig {
  std::string name;
  json instance;
  TrainerSpec trainer;
  std::vector<TrainerSpec> variants;
  std::vector<std::uint64_t> seeds;
  OutputSpec outputs;
  int threads = 0;
};

// ---------------------------------------------------------------- presets

namespace detail {

inline const std::map<std::string, std::string>& preset_sources() {
  static const std::map<std::string, std::string> presets = {
      {"fig1-aniso", R"({
  "name": "fig1-aniso",
  "instance": {"covariance": {"type": "spiked", "d": 1000, "kappa": 6.0, "theta": "w_star"},
               "link": {"type": "hermite", "degree": 2}, "w_star": "e1"},
  "trainer": {"variant": "vanilla", "eta0": 2e-5, "steps": 40000, "init_scale_cr": 0.05},
  "seeds": {"count": 20, "start": 1}
})"},
      {"fig1-iso", R"({
  "name": "fig1-iso",
  "instance": {"covariance": {"type": "spiked", "d": 1000, "kappa": 0.0, "theta": "w_star"},
               "link": {"type": "hermite", "degree": 2}, "w_star": "e1"},
  "trainer": {"variant": "vanilla", "eta0": 2e-5, "steps": 40000, "init_scale_cr": 0.05},
  "seeds": {"count": 20, "start": 1}
})"},
      {"fig1-draft", R"({
  "name": "fig1-draft",
  "instance": {"covariance": {"type": "spiked", "d": 7192, "kappa": 6.0, "theta": "w_star"},
               "link": {"type": "hermite", "degree": 3}, "w_star": "e1"},
  "trainer": {"variant": "vanilla", "eta0": 1e-4, "steps": 10000, "init_scale_cr": 0.05},
  "seeds": {"count": 20, "start": 1}
})"},
      {"fig2", R"({
  "name": "fig2",
  "instance": {"covariance": {"type": "spiked", "d": 1000, "kappa": 6.0, "theta": "w_star"},
               "link": {"type": "hermite", "degree": 2}, "w_star": "e1"},
  "trainer": {"variant": "vanilla", "eta0": 2e-5, "steps": 40000, "init_scale_cr": 0.05},
  "variants": [{"label": "vanilla"}, {"label": "spherical", "variant": "spherical", "eta0": 4e-4}],
  "seeds": {"count": 20, "start": 1}
})"},
      {"repsgd", R"({
  "name": "repsgd",
  "instance": {"covariance": {"type": "identity", "d": 4000},
               "link": {"type": "hermite", "degree": 3}, "w_star": "e1"},
  "trainer": {"variant": "vanilla", "eta0": 1e-4, "eta2": 1e-4, "steps": 80000, "init_scale_cr": 0.1,
              "label_sign": -1},
  "variants": [{"label": "vanilla"}, {"label": "repsgd", "variant": "repsgd"}],
  "seeds": {"count": 10, "start": 1}
})"},
      {"adaptive-lr", R"({
  "name": "adaptive-lr",
  "instance": {"covariance": {"type": "identity", "d": 4000},
               "link": {"type": "sign"}, "w_star": "e1"},
  "trainer": {"variant": "vanilla", "eta0": 1e-6, "steps": 8000, "init_scale_cr": 0.001, "record_every": 1},
  "variants": [{"label": "vanilla"}, {"label": "adaptive", "variant": "adaptive", "growth": 1e-6}],
  "seeds": {"count": 10, "start": 1}
})"},
      {"theorem1-iso", R"({
  "name": "theorem1-iso",
  "instance": {"covariance": {"type": "identity", "d": 500},
               "link": {"type": "hermite", "degree": 2}, "w_star": "e1"},
  "trainer": {"variant": "vanilla", "schedule": "theorem1", "eps_d": 0.1, "init_scale_cr": 1.0},
  "seeds": {"count": 20, "start": 1}
})"},
  };
  return presets;
}

}  // namespace detail

inline std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : detail::preset_sources()) out.push_back(k);
  return out;
}

inline json preset_json(const std::string& name) {
  const auto& p = detail::preset_sources();
  const auto it = p.find(name);
  if (it == p.end()) throw ConfigError("unknown preset '" + name + "'");
  return json::parse(it->second);
}

// "a.b.c=value": value is read as JSON when it parses, else as a string.
inline void apply_override(json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &cfg;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (!node->is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

// ---------------------------------------------------------------- parsing

namespace detail {

inline void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw ConfigError(where + ": unknown field '" + k + "'");
  }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

inline Eigen::VectorXd vector_from(const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.empty()) throw ConfigError(where + " must be a nonempty array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw ConfigError(where + " must be a nonempty array of numbers");
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

inline Eigen::VectorXd direction_from(const json& spec, Eigen::Index d, std::uint64_t seed, const std::string& where) {
  if (spec.is_string()) {
    const std::string s = spec.get<std::string>();
    if (s == "e1") return Eigen::VectorXd::Unit(d, 0);
    if (s == "random") {
      Rng rng(seed);
      Eigen::VectorXd v = rng.normal_vector(d);
      return v / v.norm();
    }
    throw ConfigError(where + ": unknown direction '" + s + "'");
  }
  Eigen::VectorXd v = vector_from(spec, where);
  if (v.size() != d) throw ConfigError(where + ": length " + std::to_string(v.size()) + " != d = " + std::to_string(d));
  if (!(v.norm() > 0.0)) throw ConfigError(where + ": zero vector");
  return v / v.norm();
}

inline Variant parse_variant(const std::string& s) {
  if (s == "vanilla") return Variant::Vanilla;
  if (s == "spherical") return Variant::SphericalQ;
  if (s == "adaptive") return Variant::AdaptiveLR;
  if (s == "repsgd") return Variant::RepSGD;
  throw ConfigError("unknown trainer variant '" + s + "'");
}

inline void apply_trainer_fields(TrainerSpec& t, const json& j, const std::string& where) {
  check_keys(j, where,
             {"label", "variant", "schedule", "eps_d", "eta0", "steps", "growth", "eta2", "init_scale_cr",
              "record_every", "label_sign"});
  t.label = get_or<std::string>(j, "label", t.label, where);
  if (j.contains("variant")) {
    t.base.variant = parse_variant(get_or<std::string>(j, "variant", "vanilla", where));
    if (!j.contains("label")) t.label = to_string(t.base.variant);
  }
  if (j.contains("schedule")) {
    const auto s = get_or<std::string>(j, "schedule", "fixed", where);
    if (s == "fixed") {
      t.schedule = ScheduleKind::Fixed;
    } else if (s == "theorem1") {
      t.schedule = ScheduleKind::Theorem1;
    } else {
      throw ConfigError(where + ".schedule must be 'fixed' or 'theorem1'");
    }
  }
  t.eps_d = get_or<double>(j, "eps_d", t.eps_d, where);
  const bool eta0_given = j.contains("eta0");
  t.base.eta0 = get_or<double>(j, "eta0", t.base.eta0, where);
  if (eta0_given && !j.contains("eta2")) t.base.eta2 = t.base.eta0;
  t.base.eta2 = get_or<double>(j, "eta2", t.base.eta2, where);
  t.base.steps = get_or<std::int64_t>(j, "steps", t.base.steps, where);
  t.base.growth = get_or<double>(j, "growth", t.base.growth, where);
  t.base.init_scale_cr = get_or<double>(j, "init_scale_cr", t.base.init_scale_cr, where);
  t.base.record_every = get_or<std::int64_t>(j, "record_every", t.base.record_every, where);
  if (j.contains("label_sign")) {
    const json& ls = j.at("label_sign");
    if (ls.is_string() && ls.get<std::string>() == "auto") {
      t.label_sign.reset();
    } else if (ls.is_number() && (ls.get<double>() == 1.0 || ls.get<double>() == -1.0)) {
      t.label_sign = ls.get<double>();
    } else {
      throw ConfigError(where + ".label_sign must be \"auto\", 1 or -1");
    }
  }
  if (!(t.eps_d > 0.0 && t.eps_d < 1.0)) throw ConfigError(where + ".eps_d must lie in (0, 1)");
  TrainerConfig probe = t.base;
  try {
    probe.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j) {
  detail::check_keys(j, "config", {"name", "instance", "trainer", "variants", "seeds", "outputs", "threads"});
  ExperimentConfig c;
  c.name = detail::get_or<std::string>(j, "name", "", "config");
  if (c.name.empty()) throw ConfigError("config.name must be a nonempty string");
  if (!j.contains("instance")) throw ConfigError("config.instance is required");
  c.instance = j.at("instance");
  detail::check_keys(c.instance, "instance", {"covariance", "link", "w_star", "w_star_seed"});
  if (!c.instance.contains("covariance")) throw ConfigError("instance.covariance is required");
  if (!c.instance.contains("link")) throw ConfigError("instance.link is required");

  c.trainer.label = "vanilla";
  if (j.contains("trainer")) detail::apply_trainer_fields(c.trainer, j.at("trainer"), "trainer");
  if (j.contains("variants")) {
    const json& vs = j.at("variants");
    if (!vs.is_array()) throw ConfigError("config.variants must be an array");
    for (std::size_t i = 0; i < vs.size(); ++i) {
      TrainerSpec t = c.trainer;
      detail::apply_trainer_fields(t, vs[i], "variants[" + std::to_string(i) + "]");
      c.variants.push_back(std::move(t));
    }
  }

  const json seeds = j.contains("seeds") ? j.at("seeds") : json{{"count", 20}, {"start", 1}};
  if (seeds.is_array()) {
    for (const auto& s : seeds) {
      if (!s.is_number_integer()) throw ConfigError("config.seeds entries must be integers");
      c.seeds.push_back(s.get<std::uint64_t>());
    }
  } else if (seeds.is_object()) {
    detail::check_keys(seeds, "seeds", {"count", "start"});
    const auto count = detail::get_or<std::int64_t>(seeds, "count", 20, "seeds");
    const auto start = detail::get_or<std::uint64_t>(seeds, "start", 1, "seeds");
    for (std::int64_t i = 0; i < count; ++i) c.seeds.push_back(start + static_cast<std::uint64_t>(i));
  } else {
    throw ConfigError("config.seeds must be an array or {count, start}");
  }
  if (c.seeds.empty()) throw ConfigError("config.seeds must contain at least one seed");

  if (j.contains("outputs")) {
    const json& o = j.at("outputs");
    detail::check_keys(o, "outputs", {"csv", "summary", "svg"});
    c.outputs.csv = detail::get_or<std::string>(o, "csv", c.outputs.csv, "outputs");
    c.outputs.summary = detail::get_or<std::string>(o, "summary", c.outputs.summary, "outputs");
    if (o.contains("svg") && !o.at("svg").is_null()) c.outputs.svg = detail::get_or<std::string>(o, "svg", "", "outputs");
  }
  c.threads = detail::get_or<int>(j, "threads", 0, "config");
  if (c.threads < 0) throw ConfigError("config.threads must be >= 0");
  return c;
}

inline LinkFunction build_link(const json& l) {
  detail::check_keys(l, "instance.link", {"type", "degree", "series_degree", "values"});
  const auto type = detail::get_or<std::string>(l, "type", "", "instance.link");
  if (type == "hermite") {
    const int degree = detail::get_or<int>(l, "degree", 2, "instance.link");
    if (degree < 1) throw ConfigError("instance.link.degree must be >= 1");
    return LinkFunction::hermite(degree);
  }
  if (type == "sign") {
    const int sd = detail::get_or<int>(l, "series_degree", kDefaultSeriesDegree, "instance.link");
    if (sd < 1) throw ConfigError("instance.link.series_degree must be >= 1");
    return LinkFunction::sign(sd);
  }
  if (type == "coeffs") {
    if (!l.contains("values")) throw ConfigError("instance.link.values is required for coeffs links");
    const Eigen::VectorXd v = detail::vector_from(l.at("values"), "instance.link.values");
    try {
      return normalize_link(HermiteCoeffs(std::vector<double>(v.data(), v.data() + v.size())));
    } catch (const std::exception& e) {
      throw ConfigError(std::string("instance.link: ") + e.what());
    }
  }
  throw ConfigError("instance.link.type must be 'hermite', 'sign' or 'coeffs'");
}

inline SimInstance build_instance(const json& inst) {
  detail::check_keys(inst, "instance", {"covariance", "link", "w_star", "w_star_seed"});
  const json& c = inst.at("covariance");
  detail::check_keys(c, "instance.covariance", {"type", "d", "kappa", "theta", "theta_seed", "spectrum", "matrix"});
  const auto type = detail::get_or<std::string>(c, "type", "", "instance.covariance");
  const auto w_seed = detail::get_or<std::uint64_t>(inst, "w_star_seed", 0, "instance");
  const json w_spec = inst.contains("w_star") ? inst.at("w_star") : json("e1");

  Eigen::Index d = 0;
  if (type == "identity" || type == "spiked") {
    d = detail::get_or<Eigen::Index>(c, "d", 0, "instance.covariance");
    if (d < 1) throw ConfigError("instance.covariance.d must be >= 1");
  } else if (type == "diagonal") {
    if (!c.contains("spectrum")) throw ConfigError("instance.covariance.spectrum is required");
    d = static_cast<Eigen::Index>(c.at("spectrum").size());
  } else if (type == "dense") {
    if (!c.contains("matrix") || !c.at("matrix").is_array()) throw ConfigError("instance.covariance.matrix is required");
    d = static_cast<Eigen::Index>(c.at("matrix").size());
  } else {
    throw ConfigError("instance.covariance.type must be identity, spiked, diagonal or dense");
  }
  if (d < 1) throw ConfigError("instance.covariance has dimension 0");
  const Eigen::VectorXd w_star = detail::direction_from(w_spec, d, w_seed, "instance.w_star");

  try {
    std::optional<CovarianceSpec> cov;
    if (type == "identity") {
      cov = CovarianceSpec::identity(d);
    } else if (type == "spiked") {
      const double kappa = detail::get_or<double>(c, "kappa", 0.0, "instance.covariance");
      const json t_spec = c.contains("theta") ? c.at("theta") : json("w_star");
      Eigen::VectorXd theta;
      if (t_spec.is_string() && t_spec.get<std::string>() == "w_star") {
        theta = w_star;
      } else {
        const auto t_seed = detail::get_or<std::uint64_t>(c, "theta_seed", 0, "instance.covariance");
        theta = detail::direction_from(t_spec, d, t_seed, "instance.covariance.theta");
      }
      cov = CovarianceSpec::spiked(d, kappa, theta);
    } else if (type == "diagonal") {
      cov = CovarianceSpec::diagonal(detail::vector_from(c.at("spectrum"), "instance.covariance.spectrum"));
    } else {
      const json& rows = c.at("matrix");
      Eigen::MatrixXd m(d, d);
      for (Eigen::Index i = 0; i < d; ++i) {
        const Eigen::VectorXd r = detail::vector_from(rows[static_cast<std::size_t>(i)], "instance.covariance.matrix row");
        if (r.size() != d) throw ConfigError("instance.covariance.matrix must be square");
        m.row(i) = r.transpose();
      }
      cov = CovarianceSpec::dense(m);
    }
    return make_instance(std::move(*cov), w_star, build_link(inst.at("link")));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("instance: ") + e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("instance: ") + e.what());
  }
}

// ---------------------------------------------------------------- running

struct SeedResult {
  std::uint64_t seed = 0;
  TrainerConfig config;  // resolved per seed (theorem1 fills eta0 and steps)
  TrajectoryRecord record;
};

// Label sign from the coefficient check: the trainer uses -sign when the
// check holds, +1 otherwise.
inline double auto_label_sign(const LinkFunction& link) {
  const AssumptionCoeffCheck chk = check_assumption_coeff(link, 0.1, 200);
  return chk.holds ? -static_cast<double>(chk.sign) : 1.0;
}

// Resolves the per-seed trainer config. The theorem1 schedule reads m0 from
// the same initialization the trajectory will use.
inline TrainerConfig resolve_trainer(const SimInstance& inst, const TrainerSpec& spec, std::uint64_t seed) {
  TrainerConfig cfg = spec.base;
  cfg.seed = seed;
  cfg.label_sign = spec.label_sign ? *spec.label_sign : auto_label_sign(inst.link);
  if (spec.schedule == ScheduleKind::Theorem1) {
    Rng rng(seed);
    const Eigen::VectorXd w0 = init_weights(inst, cfg.init_scale_cr, rng);
    double m0 = overlap(inst, w0);
    if (inst.link.sign_symmetric()) m0 = std::abs(m0);
    const Schedule s = theorem1_schedule(inst.link.k_star(), m0, inst.stats.theta_ratio, spec.eps_d);
    cfg.eta0 = s.eta;
    cfg.steps = s.steps;
    if (cfg.variant == Variant::RepSGD) cfg.eta2 = s.eta;
  }
  return cfg;
}

inline int resolve_threads(int requested, std::size_t jobs) {
  int n = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return std::max(1, std::min<int>(n, static_cast<int>(jobs)));
}

// Runs every seed; results are stored by seed position, so the output does not
// depend on scheduling.
inline std::vector<SeedResult> run_seeds(const SimInstance& inst, const TrainerSpec& spec,
                                         const std::vector<std::uint64_t>& seeds, int threads = 0) {
  std::vector<SeedResult> out(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        out[i].seed = seeds[i];
        out[i].config = resolve_trainer(inst, spec, seeds[i]);
        out[i].record = run_trajectory(inst, out[i].config);
      } catch (const std::exception& e) {
        errors[i] = std::make_exception_ptr(SeedError(i, seeds[i], e.what()));
      }
    }
  };
  const int n = resolve_threads(threads, seeds.size());
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

struct RunSummary {
  std::string label;
  std::vector<SeedResult> results;
  double median_final_alignment = 0.0;
  // Empty when fewer than half of the seeds escaped.
  std::optional<double> median_escape_time;
  double escaped_fraction = 0.0;
};

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty input");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Escape time with non-escaping seeds at +infinity.
inline double escape_or_inf(const TrajectoryRecord& r) {
  return r.escape_time ? static_cast<double>(*r.escape_time) : std::numeric_limits<double>::infinity();
}

inline RunSummary summarize(std::string label, std::vector<SeedResult> results) {
  RunSummary s;
  s.label = std::move(label);
  std::vector<double> finals;
  std::vector<double> escapes;
  std::size_t escaped = 0;
  for (const auto& r : results) {
    finals.push_back(r.record.final_alignment());
    escapes.push_back(escape_or_inf(r.record));
    if (r.record.escape_time) ++escaped;
  }
  s.median_final_alignment = median(finals);
  const double me = median(escapes);
  if (std::isfinite(me)) s.median_escape_time = me;
  s.escaped_fraction = static_cast<double>(escaped) / static_cast<double>(results.size());
  s.results = std::move(results);
  return s;
}

inline json to_json(const RunSummary& s, const SimInstance& inst) {
  json seeds = json::array();
  for (const auto& r : s.results) {
    seeds.push_back({{"seed", r.seed},
                     {"eta0", r.config.eta0},
                     {"steps", r.config.steps},
                     {"label_sign", r.config.label_sign},
                     {"m0", r.record.m0},
                     {"final_m", r.record.final_m},
                     {"final_alignment", r.record.final_alignment()},
                     {"escape_time", r.record.escape_time ? json(*r.record.escape_time) : json(nullptr)},
                     {"noise_budget", r.record.noise_budget},
                     {"max_resync_drift", r.record.max_resync_drift}});
  }
  return {{"label", s.label},
          {"link", inst.link.describe()},
          {"k_star", inst.link.k_star()},
          {"unbounded_link", inst.unbounded_link()},
          {"sign_symmetric_link", inst.link.sign_symmetric()},
          {"theta_ratio", inst.stats.theta_ratio},
          {"typical_m0", inst.stats.typical_m0},
          {"median_final_alignment", s.median_final_alignment},
          {"median_escape_time", s.median_escape_time ? json(*s.median_escape_time) : json(nullptr)},
          {"escaped_fraction", s.escaped_fraction},
          {"seeds", seeds}};
}

struct PairedDelta {
  std::uint64_t seed = 0;
  std::optional<double> escape_delta;  // variant - baseline, when both escaped
  double final_delta = 0.0;            // variant - baseline final alignment
  bool earlier = false;                // variant escaped strictly before baseline
};

struct PairedComparison {
  std::string label;
  std::vector<PairedDelta> per_seed;
  double mean_final_diff = 0.0;
  std::size_t earlier_count = 0;
};

struct CompareSummary {
  std::vector<RunSummary> runs;  // runs[0] is the baseline
  std::vector<PairedComparison> paired;
};

inline PairedComparison pair_against(const RunSummary& base, const RunSummary& other) {
  PairedComparison p;
  p.label = other.label;
  double sum = 0.0;
  for (std::size_t i = 0; i < base.results.size(); ++i) {
    const auto& b = base.results[i].record;
    const auto& o = other.results[i].record;
    PairedDelta d;
    d.seed = base.results[i].seed;
    if (b.escape_time && o.escape_time) d.escape_delta = static_cast<double>(*o.escape_time - *b.escape_time);
    d.final_delta = o.final_alignment() - b.final_alignment();
    d.earlier = escape_or_inf(o) < escape_or_inf(b);
    if (d.earlier) ++p.earlier_count;
    sum += d.final_delta;
    p.per_seed.push_back(d);
  }
  p.mean_final_diff = sum / static_cast<double>(base.results.size());
  return p;
}

inline json to_json(const CompareSummary& c, const SimInstance& inst) {
  json runs = json::array();
  for (const auto& r : c.runs) runs.push_back(to_json(r, inst));
  json paired = json::array();
  for (const auto& p : c.paired) {
    json rows = json::array();
    for (const auto& d : p.per_seed) {
      rows.push_back({{"seed", d.seed},
                      {"escape_delta", d.escape_delta ? json(*d.escape_delta) : json(nullptr)},
                      {"final_delta", d.final_delta},
                      {"earlier", d.earlier}});
    }
    paired.push_back({{"label", p.label},
                      {"baseline", c.runs.front().label},
                      {"mean_final_diff", p.mean_final_diff},
                      {"earlier_count", p.earlier_count},
                      {"n", p.per_seed.size()},
                      {"per_seed", rows}});
  }
  return {{"runs", runs}, {"paired", paired}};
}

// ---------------------------------------------------------------- output

// Rows grouped by run, then seed, in config order.
inline void write_runs_csv(std::ostream& os, const std::vector<RunSummary>& runs, bool with_variant) {
  std::vector<std::string> cols{"seed"};
  if (with_variant) cols.push_back("variant");
  write_trajectory_csv_header(os, cols);
  for (const auto& run : runs) {
    for (const auto& r : run.results) {
      std::vector<std::string> extra{std::to_string(r.seed)};
      if (with_variant) extra.push_back(run.label);
      write_trajectory_csv_rows(os, r.record, extra);
    }
  }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  return out;
}

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace detail

// Line chart of m_t against t, one polyline per (variant, seed), read back from
// a trajectory CSV.
inline void write_svg_from_csv(const std::string& csv_path, const std::string& svg_path, const std::string& title) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot read " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(csv_path + " is empty");
  const auto header = detail::split_csv_line(line);
  auto col = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  };
  const int ct = col("t");
  const int cm = col("m_t");
  const int cs = col("seed");
  const int cv = col("variant");
  if (ct < 0 || cm < 0) throw std::runtime_error(csv_path + " lacks t/m_t columns");

  std::vector<std::string> groups;  // variant labels in first-seen order
  std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> lines;  // (group, points)
  std::string current_key;
  double t_max = 0.0;
  double m_min = 0.0;
  double m_max = 1.0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    const std::string group = cv >= 0 ? cells.at(static_cast<std::size_t>(cv)) : "m_t";
    const std::string key = group + "/" + (cs >= 0 ? cells.at(static_cast<std::size_t>(cs)) : "");
    if (key != current_key || lines.empty()) {
      lines.push_back({group, {}});
      current_key = key;
      if (std::find(groups.begin(), groups.end(), group) == groups.end()) groups.push_back(group);
    }
    const double t = std::stod(cells.at(static_cast<std::size_t>(ct)));
    const double m = std::stod(cells.at(static_cast<std::size_t>(cm)));
    lines.back().second.emplace_back(t, m);
    t_max = std::max(t_max, t);
    m_min = std::min(m_min, m);
    m_max = std::max(m_max, m);
  }
  if (t_max <= 0.0) t_max = 1.0;

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  const double w = 720, h = 440, left = 60, right = 150, top = 40, bottom = 50;
  const double pw = w - left - right, ph = h - top - bottom;
  auto px = [&](double t) { return left + pw * t / t_max; };
  auto py = [&](double m) { return top + ph * (m_max - m) / (m_max - m_min); };

  std::ofstream os(svg_path);
  if (!os) throw std::runtime_error("cannot write " + svg_path);
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << left << "\" y=\"22\" font-size=\"14\">" << detail::svg_escape(title) << "</text>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double m = m_min + (m_max - m_min) * i / 4.0;
    const double t = t_max * i / 4.0;
    os << "<text x=\"" << left - 8 << "\" y=\"" << py(m) + 4 << "\" text-anchor=\"end\">" << std::setprecision(2) << m << "</text>\n";
    os << "<text x=\"" << px(t) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << std::setprecision(0) << t << "</text>\n";
    os << std::setprecision(2);
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\">t</text>\n";
  os << "<text x=\"16\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 16 " << top + ph / 2 << ")\" text-anchor=\"middle\">m_t</text>\n";
  for (const auto& [group, pts] : lines) {
    const auto gi = static_cast<std::size_t>(std::find(groups.begin(), groups.end(), group) - groups.begin());
    os << "<polyline fill=\"none\" stroke-opacity=\"0.6\" stroke=\"" << palette[gi % 6] << "\" points=\"";
    for (const auto& [t, m] : pts) os << px(t) << ',' << py(m) << ' ';
    os << "\"/>\n";
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double y = top + 10 + 18 * static_cast<double>(g);
    os << "<line x1=\"" << left + pw + 15 << "\" y1=\"" << y << "\" x2=\"" << left + pw + 35 << "\" y2=\"" << y << "\" stroke=\"" << palette[g % 6] << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << left + pw + 40 << "\" y=\"" << y + 4 << "\">" << detail::svg_escape(groups[g]) << "</text>\n";
  }
  os << "</svg>\n";
}

namespace detail {

inline void write_outputs(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                          const std::vector<RunSummary>& runs, bool with_variant, const json& summary) {
  std::filesystem::create_directories(out_dir);
  const auto csv_path = out_dir / cfg.outputs.csv;
  {
    std::ofstream os(csv_path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + csv_path.string());
    write_runs_csv(os, runs, with_variant);
  }
  {
    const auto p = out_dir / cfg.outputs.summary;
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << summary.dump(2) << '\n';
  }
  if (cfg.outputs.svg) write_svg_from_csv(csv_path.string(), (out_dir / *cfg.outputs.svg).string(), cfg.name);
}

}  // namespace detail

// Runs the trainer over all seeds. With a nonempty out_dir, writes the
// trajectory CSV (seed column appended), the summary JSON and the optional SVG.
inline RunSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir = {}) {
  const SimInstance inst = build_instance(cfg.instance);
  RunSummary s = summarize(cfg.trainer.label, run_seeds(inst, cfg.trainer, cfg.seeds, cfg.threads));
  if (!out_dir.empty()) {
    json j = to_json(s, inst);
    j["name"] = cfg.name;
    detail::write_outputs(cfg, out_dir, {s}, false, j);
  }
  return s;
}

// Runs every entry of cfg.variants on the same instance and seeds and pairs
// each against the first.
inline CompareSummary compare_variants(const ExperimentConfig& cfg, const std::filesystem::path& out_dir = {}) {
  if (cfg.variants.size() < 2) throw ConfigError("need >=2 variants");
  const SimInstance inst = build_instance(cfg.instance);
  CompareSummary c;
  for (const auto& v : cfg.variants) c.runs.push_back(summarize(v.label, run_seeds(inst, v, cfg.seeds, cfg.threads)));
  for (std::size_t i = 1; i < c.runs.size(); ++i) c.paired.push_back(pair_against(c.runs.front(), c.runs[i]));
  if (!out_dir.empty()) {
    json j = to_json(c, inst);
    j["name"] = cfg.name;
    detail::write_outputs(cfg, out_dir, c.runs, true, j);
  }
  return c;
}

}  // namespace anisim
