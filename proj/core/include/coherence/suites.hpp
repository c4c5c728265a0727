#ifndef COHERENCE_SUITES_HPP_
#define COHERENCE_SUITES_HPP_

#include <optional>
#include <string>
#include <vector>

#include "coherence/harness.hpp"

namespace coherence {

struct SuiteOptions {
  std::uint64_t seed = 20250808ULL;
  int jobs = 0;  // 0 = hardware concurrency
  std::optional<double> tol_override;  // replaces verdict slacks only
};

/// Names accepted by run_suite (plus "all").
std::vector<std::string> suite_names();

/// Runs one named verification suite; throws UnknownSuite for bad names.
SuiteReport run_suite(const std::string& name, const SuiteOptions& opts = {});

/// Runs every suite in order.
std::vector<SuiteReport> run_all_suites(const SuiteOptions& opts = {});

}  // namespace coherence

#endif  // COHERENCE_SUITES_HPP_
