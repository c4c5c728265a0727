// Acceptance suite: one criterion per line, nonzero exit on any failure.
//
// Each criterion maps onto a verification suite (or a slice of one) and is
// evaluated at its stated tolerance and instance count. Runtime budgets are
// enforced as hard checks.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "coherence/suites.hpp"

namespace {

struct Criterion {
  std::string name;
  std::vector<std::string> suites;
  std::vector<std::string> check_prefixes;  // empty = every check
  double budget_seconds = 0.0;
};

bool matches(const std::string& name,
             const std::vector<std::string>& prefixes) {
  if (prefixes.empty()) return true;
  for (const auto& p : prefixes)
    if (name.rfind(p, 0) == 0) return true;
  return false;
}

}  // namespace

int main() {
  using coherence::SuiteOptions;
  using coherence::SuiteReport;

  SuiteOptions opts;
  opts.seed = 20250808ULL;

  const std::vector<Criterion> criteria = {
      {"01 block toy-example golden values", {"rigidity"}, {"block/"}, 1.0},
      {"02 minimax counterexample sweep", {"minimax"}, {}, 1.0},
      {"03 rigidity examples and kernel circle",
       {"rigidity", "kernel"},
       {"affine/", "asymmetric/", "sq/", "weighted/"},
       2.0},
      {"04 direct-improvement property suite", {"direct-improvement"}, {},
       60.0},
      {"05 direct/two-step equivalence", {"equivalence"}, {}, 60.0},
      {"06 two-step bound and Hellinger floor",
       {"two-step"},
       {"delta_nonnegative", "two_step_bound", "two_step_bound_delta_form",
        "hellinger_floor_le_improvement", "direct_guarantee_dominates"},
       30.0},
      {"07 Pythagorean equality and inequality",
       {"two-step"},
       {"pythagorean_"},
       30.0},
      {"08 maximin optimality of the two-step output",
       {"two-step"},
       {"maximin_"},
       120.0},
      {"09 empirical projection guarantees", {"empirical"}, {}, 180.0},
      {"10 impossibility and orbit-average suites",
       {"orbit-average", "impossibility"},
       {},
       120.0},
      {"11 numerical hygiene identities", {"bregman-identities"}, {}, 30.0},
  };

  // Run each needed suite once and slice the criteria out of the reports.
  std::vector<std::string> needed;
  for (const auto& c : criteria)
    for (const auto& s : c.suites)
      if (std::find(needed.begin(), needed.end(), s) == needed.end())
        needed.push_back(s);

  std::printf("acceptance: running %zu suites\n", needed.size());
  std::vector<SuiteReport> reports;
  for (const auto& name : needed) {
    reports.push_back(coherence::run_suite(name, opts));
    std::printf("  suite %-20s %6.2fs  %s\n", name.c_str(),
                reports.back().wall_ns * 1e-9,
                reports.back().passed() ? "clean" : "HAS VIOLATIONS");
  }

  int failures = 0;
  for (const auto& crit : criteria) {
    int checked = 0, violated = 0;
    double wall = 0.0;
    std::string first_bad;
    for (const auto& rep : reports) {
      bool used = false;
      for (const auto& sname : crit.suites)
        if (rep.suite == sname) used = true;
      if (!used) continue;
      wall += rep.wall_ns * 1e-9;
      for (const auto& c : rep.checks) {
        if (!matches(c.name, crit.check_prefixes)) continue;
        ++checked;
        if (!c.passed) {
          ++violated;
          if (first_bad.empty()) first_bad = c.name;
        }
      }
    }
    const bool in_budget = crit.budget_seconds <= 0.0 ||
                           wall <= crit.budget_seconds;
    const bool pass = violated == 0 && checked > 0 && in_budget;
    if (!pass) ++failures;
    std::printf("[%s] %s  (%d checks, %d violations, %.2fs%s)%s%s\n",
                pass ? "PASS" : "FAIL", crit.name.c_str(), checked, violated,
                wall, in_budget ? "" : " OVER BUDGET",
                first_bad.empty() ? "" : "  first: ", first_bad.c_str());
  }

  if (failures > 0)
    std::printf("acceptance: %d criterion(s) failed\n", failures);
  else
    std::printf("acceptance: all criteria passed\n");
  return failures == 0 ? 0 : 1;
}
