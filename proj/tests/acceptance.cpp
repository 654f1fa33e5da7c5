// Acceptance criteria 1-12. Prints one PASS/FAIL line per criterion, preceded
// by the individual measurements. `--criterion N` runs a single one.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "anisim/validation.hpp"

namespace {

struct Criterion {
  int id;
  const char* title;
  const char* suite;
  double budget_seconds;  // 0: no runtime bound
};

const std::vector<Criterion> kCriteria = {
    {1, "Hermite identity suite", "hermite", 30},
    {2, "Gaussian integral lemmas", "gauss", 60},
    {3, "Population drift oracle", "drift", 60},
    {4, "Spiked vs isotropic escape", "fig1", 120},
    {5, "Vanilla vs spherical SGD", "fig2", 180},
    {6, "Norm stability", "norm-stability", 120},
    {7, "Population-vs-SGD tracking", "population-match", 120},
    {8, "Escape-time scaling", "escape-scaling", 0},
    {9, "RepSGD vs vanilla", "repsgd", 300},
    {10, "Adaptive LR", "adaptive-lr", 0},
    {11, "CSQ family", "csq", 60},
    {12, "Initialization concentration", "init", 30},
};

bool run(const Criterion& c) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<anisim::Check> checks;
  std::string error;
  try {
    checks = anisim::suites().at(c.suite)();
  } catch (const std::exception& e) {
    error = e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& ch : checks) {
    std::cout << "  ";
    anisim::print_check(std::cout, ch);
  }
  const bool in_time = c.budget_seconds <= 0 || secs <= c.budget_seconds;
  const bool ok = error.empty() && anisim::all_passed(checks) && in_time;
  char timing[96];
  if (c.budget_seconds > 0) {
    std::snprintf(timing, sizeof timing, "%.1f s, budget %.0f s", secs, c.budget_seconds);
  } else {
    std::snprintf(timing, sizeof timing, "%.1f s", secs);
  }
  std::cout << "CRITERION " << c.id << ' ' << (ok ? "PASS" : "FAIL") << "  " << c.title << " (" << timing << ")";
  if (!error.empty()) std::cout << "  error: " << error;
  if (!in_time) std::cout << "  over runtime budget";
  std::cout << std::endl;
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  std::optional<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--criterion" && i + 1 < argc) {
      only = std::stoi(argv[++i]);
    } else {
      std::cerr << "usage: acceptance [--criterion N]\n";
      return 2;
    }
  }
  int failed = 0;
  int ran = 0;
  for (const auto& c : kCriteria) {
    if (only && c.id != *only) continue;
    ++ran;
    if (!run(c)) ++failed;
  }
  if (ran == 0) {
    std::cerr << "no criterion " << *only << '\n';
    return 2;
  }
  if (!only) std::cout << (ran - failed) << '/' << ran << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
