// anisim: run experiments, population recursions, CSQ reports and validation
// suites from the command line.
//
// Exit codes: 0 success, 1 validation failure or runtime error, 2 config error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "anisim/csq.hpp"
#include "anisim/experiments.hpp"
#include "anisim/population.hpp"
#include "anisim/validation.hpp"

namespace {

using namespace anisim;

struct ConfigArgs {
  std::string preset;
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  bool svg = false;
  int threads = -1;
};

void add_config_options(CLI::App* cmd, ConfigArgs& a) {
  cmd->add_option("--preset", a.preset, "Builtin experiment preset");
  cmd->add_option("--config", a.config_path, "JSON experiment config file");
  cmd->add_option("--set", a.overrides, "Override a config field, e.g. trainer.eta0=1e-4 (repeatable)");
  cmd->add_option("--out", a.out_dir, "Output directory (default: out/<name>)");
  cmd->add_flag("--svg", a.svg, "Also write <name>.svg from the trajectory CSV");
  cmd->add_option("--threads", a.threads, "Worker threads for seeds (0 = all cores)");
}

ExperimentConfig load_config(const ConfigArgs& a) {
  if (a.preset.empty() == a.config_path.empty()) throw ConfigError("give exactly one of --preset or --config");
  json j;
  if (!a.preset.empty()) {
    j = preset_json(a.preset);
  } else {
    std::ifstream in(a.config_path);
    if (!in) throw ConfigError("cannot read " + a.config_path);
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(a.config_path + ": " + e.what());
    }
  }
  for (const auto& o : a.overrides) apply_override(j, o);
  if (a.threads >= 0) j["threads"] = a.threads;
  ExperimentConfig cfg = parse_config(j);
  if (a.svg && !cfg.outputs.svg) cfg.outputs.svg = cfg.name + ".svg";
  return cfg;
}

std::filesystem::path out_dir_for(const ConfigArgs& a, const ExperimentConfig& cfg) {
  return a.out_dir.empty() ? std::filesystem::path("out") / cfg.name : std::filesystem::path(a.out_dir);
}

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "none";
  std::ostringstream os;
  os << *v;
  return os.str();
}

void print_run(const RunSummary& s) {
  std::cout << "[" << s.label << "] median final m = " << s.median_final_alignment
            << ", median escape time = " << fmt_opt(s.median_escape_time) << ", escaped " << s.escaped_fraction * 100.0
            << "%\n";
  std::cout << "  seed        m0    final_m   escape\n";
  for (const auto& r : s.results) {
    std::cout << "  " << std::setw(4) << r.seed << "  " << std::setw(9) << std::setprecision(4) << r.record.m0 << "  "
              << std::setw(9) << r.record.final_m << "  "
              << (r.record.escape_time ? std::to_string(*r.record.escape_time) : std::string("-")) << '\n';
  }
}

int cmd_run(const ConfigArgs& a) {
  const ExperimentConfig cfg = load_config(a);
  const auto dir = out_dir_for(a, cfg);
  const RunSummary s = run_experiment(cfg, dir);
  print_run(s);
  std::cout << "wrote " << (dir / cfg.outputs.csv).string() << '\n';
  return 0;
}

int cmd_compare(const ConfigArgs& a) {
  const ExperimentConfig cfg = load_config(a);
  const auto dir = out_dir_for(a, cfg);
  const CompareSummary c = compare_variants(cfg, dir);
  for (const auto& r : c.runs) print_run(r);
  for (const auto& p : c.paired) {
    std::cout << p.label << " vs " << c.runs.front().label << ": mean final m diff = " << p.mean_final_diff
              << ", escaped earlier in " << p.earlier_count << '/' << p.per_seed.size() << " paired seeds\n";
  }
  std::cout << "wrote " << (dir / cfg.outputs.csv).string() << '\n';
  return 0;
}

struct PopulationArgs {
  double m0 = 0.01;
  double eta_tilde = 1e-4;
  int k_star = 3;
  std::int64_t max_steps = 2'000'000;
  double target = 0.5;
  std::int64_t every = 1000;
  std::string csv;
};

int cmd_population(const PopulationArgs& a) {
  RecursionResult r;
  double est = 0.0;
  try {
    r = population_recursion(a.m0, a.eta_tilde, a.k_star, a.max_steps, a.target);
    est = escape_time_estimate(a.m0, a.eta_tilde, a.k_star, a.target);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!a.csv.empty()) {
    std::ofstream os(a.csv, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + a.csv);
    os << "t,m_t\n" << std::setprecision(10);
    for (std::size_t t = 0; t < r.trajectory.size(); ++t) {
      if (static_cast<std::int64_t>(t) % std::max<std::int64_t>(1, a.every) == 0 || t + 1 == r.trajectory.size()) {
        os << t << ',' << r.trajectory[t] << '\n';
      }
    }
  }
  std::cout << "k*  m0          eta_tilde   target  ode_estimate  recursion_hit  rel_diff\n";
  std::cout << std::setw(2) << a.k_star << "  " << std::setw(10) << a.m0 << "  " << std::setw(10) << a.eta_tilde << "  "
            << std::setw(6) << a.target << "  " << std::setw(12) << est << "  ";
  if (r.hit_time) {
    std::cout << std::setw(13) << *r.hit_time << "  " << std::abs(static_cast<double>(*r.hit_time) - est) / est << '\n';
  } else {
    std::cout << std::setw(13) << "not reached" << "  -\n";
  }
  return 0;
}

struct CsqArgs {
  std::string cov = "identity";
  long d = 2000;
  double kappa = 6.0;
  long p = 1000;
  int k = 2;
  int runs = 1;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string csv;
};

int cmd_csq(const CsqArgs& a) {
  if (a.d < 1 || a.p < 2 || a.runs < 1 || a.k < 1) throw ConfigError("csq: need d >= 1, p >= 2, runs >= 1, k >= 1");
  CovarianceSpec spec = a.cov == "spiked" ? CovarianceSpec::spiked(a.d, a.kappa, Eigen::VectorXd::Unit(a.d, 0))
                        : a.cov == "identity" ? CovarianceSpec::identity(a.d)
                                              : throw ConfigError("csq: --cov must be identity or spiked");
  const double q = static_cast<double>(a.p) * static_cast<double>(a.p);
  const EpsilonBound bound = epsilon_bound(spec, q, a.k);
  std::ofstream csv;
  if (!a.csv.empty()) {
    csv.open(a.csv, std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write " + a.csv);
    csv << "run,p,d,eps_hat,eps_bound,v,min_q_norm_sq,trace_q,multiplier\n" << std::setprecision(10);
  }
  std::cout << "run     p      d    eps_hat   eps_bound        v  tau2_bound  n(tau2=1/n)  n(tau=1/sqrt n)  displayed\n";
  for (int r = 0; r < a.runs; ++r) {
    Rng rng(a.seed + static_cast<std::uint64_t>(r));
    const CsqFamilyReport rep = build_family(spec, a.p, rng, a.threads);
    std::cout << std::setw(3) << r << "  " << std::setw(4) << rep.family_size << "  " << std::setw(5) << rep.dim << "  "
              << std::setw(9) << std::setprecision(4) << rep.max_pairwise_q_corr << "  ";
    if (bound.applicable) {
      const SampleComplexity sc = sample_complexity_heuristic(spec, a.k, q);
      std::cout << std::setw(10) << bound.epsilon << "  " << std::setw(7) << bound.v << "  " << std::setw(10) << sc.tau_sq
                << "  " << std::setw(11) << sc.n_tau_sq << "  " << std::setw(15) << sc.n_tau_fourth << "  " << sc.displayed
                << '\n';
    } else {
      std::cout << "n/a (log argument " << bound.log_argument << " <= 1)\n";
    }
    if (csv) {
      csv << r << ',' << rep.family_size << ',' << rep.dim << ',' << rep.max_pairwise_q_corr << ',' << rep.epsilon_bound
          << ',' << rep.v << ',' << rep.min_q_norm_sq << ',' << spec.trace() << ',' << rep.multiplier << '\n';
    }
  }
  if (!bound.regime_ok) std::cout << "note: tr Q < ||Q||_F sqrt(log d); outside the bound's regime\n";
  return 0;
}

int cmd_validate(const std::string& suite, bool list) {
  if (list) {
    for (const auto& [name, fn] : suites()) std::cout << name << '\n';
    return 0;
  }
  std::vector<std::string> names;
  if (suite == "all") {
    for (const auto& [name, fn] : suites()) names.push_back(name);
  } else if (suites().count(suite)) {
    names.push_back(suite);
  } else {
    throw ConfigError("unknown suite '" + suite + "'");
  }
  bool ok = true;
  for (const auto& n : names) {
    const auto checks = suites().at(n)();
    for (const auto& c : checks) print_check(std::cout, c);
    ok = ok && all_passed(checks);
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online SGD on single index models with anisotropic Gaussian inputs"};
  app.require_subcommand(1);

  ConfigArgs run_args;
  auto* run = app.add_subcommand("run", "Run one trainer over all seeds of an experiment");
  add_config_options(run, run_args);

  ConfigArgs cmp_args;
  auto* compare = app.add_subcommand("compare", "Run the config's variants on paired seeds");
  add_config_options(compare, cmp_args);

  PopulationArgs pop_args;
  auto* pop = app.add_subcommand("population", "Iterate the population recursion and compare with the ODE estimate");
  pop->add_option("--m0", pop_args.m0, "Initial overlap")->capture_default_str();
  pop->add_option("--eta-tilde", pop_args.eta_tilde, "Effective step")->capture_default_str();
  pop->add_option("--k", pop_args.k_star, "Information exponent")->capture_default_str();
  pop->add_option("--max-steps", pop_args.max_steps, "Iterations")->capture_default_str();
  pop->add_option("--target", pop_args.target, "Escape threshold")->capture_default_str();
  pop->add_option("--every", pop_args.every, "CSV row stride")->capture_default_str();
  pop->add_option("--csv", pop_args.csv, "Write (t, m_t) rows here");

  CsqArgs csq_args;
  auto* csq = app.add_subcommand("csq", "Build nearly Q-orthogonal families and report CSQ bounds");
  csq->add_option("--cov", csq_args.cov, "identity or spiked (theta = e1)")->capture_default_str();
  csq->add_option("--d", csq_args.d, "Dimension")->capture_default_str();
  csq->add_option("--kappa", csq_args.kappa, "Spike strength")->capture_default_str();
  csq->add_option("--p", csq_args.p, "Family size")->capture_default_str();
  csq->add_option("--k", csq_args.k, "Degree in the tolerance bound")->capture_default_str();
  csq->add_option("--runs", csq_args.runs, "Independent families")->capture_default_str();
  csq->add_option("--seed", csq_args.seed, "First seed")->capture_default_str();
  csq->add_option("--threads", csq_args.threads, "Workers for the pairwise scan")->capture_default_str();
  csq->add_option("--csv", csq_args.csv, "Write one row per run here");

  std::string suite;
  bool list = false;
  auto* val = app.add_subcommand("validate", "Run a validation suite (or 'all')");
  val->add_option("suite", suite, "Suite name");
  val->add_flag("--list", list, "List suites");

  std::string preset_name;
  bool list_presets = false;
  auto* pre = app.add_subcommand("preset", "Print a builtin preset as JSON");
  pre->add_option("name", preset_name, "Preset name");
  pre->add_flag("--list", list_presets, "List presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*compare) return cmd_compare(cmp_args);
    if (*pop) return cmd_population(pop_args);
    if (*csq) return cmd_csq(csq_args);
    if (*val) {
      if (!list && suite.empty()) throw ConfigError("validate: give a suite name, 'all', or --list");
      return cmd_validate(suite, list);
    }
    if (*pre) {
      if (list_presets || preset_name.empty()) {
        for (const auto& n : preset_names()) std::cout << n << '\n';
        return 0;
      }
      std::cout << preset_json(preset_name).dump(2) << '\n';
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
