#ifndef COHERENCE_EMPIRICAL_HPP_
#define COHERENCE_EMPIRICAL_HPP_

#include <optional>
#include <vector>

#include "coherence/projection.hpp"

namespace coherence {

/// An i.i.d. prompt sample, reproducible from the seed.
struct PromptSample {
  std::vector<Eigen::Index> indices;
  std::uint64_t seed = 0;

  Eigen::Index size() const { return static_cast<Eigen::Index>(indices.size()); }
};

PromptSample sample_prompts(const PromptDistribution& dist, Eigen::Index m,
                            std::uint64_t seed);

/// Empirical weights: multiplicity / m per prompt.
Vector empirical_weights(const PromptSample& sample, Eigen::Index prompts);

/// Empirical direct projection. Prompts outside the sample stay constrained
/// by the coherence blocks; fully unsampled orbits are fixed to the
/// set-feasible projection of pi0 restricted to them.
SolveResult empirical_projection(const GeneratorSpec& gen,
                                 const PromptSample& sample,
                                 const InvarianceMap& phi,
                                 const ConvexModelSet& set_pi,
                                 const Matrix& pi0,
                                 const SolverOptions& opts = {});

/// Certified lower estimate of the deviation supremum
/// sup_f |E[f] - E_hat[f]| over the divergence function class, obtained by
/// maximizing over a panel of feasible models plus structured candidates.
double epsilon_m_lower(const GeneratorSpec& gen, const PromptDistribution& dist,
                       const PromptSample& sample, const ConvexModelSet& set_pi,
                       const InvarianceMap& phi, const Matrix& pi0,
                       int panel_size, const SolverOptions& opts = {});

/// Grid-refined upper bound of the same supremum; quadratic generators on
/// small instances only (the grid relaxes the feasible set to the block-row
/// product and adds a Lipschitz cell correction).
double epsilon_m_grid_upper(const GeneratorSpec& gen,
                            const PromptDistribution& dist,
                            const PromptSample& sample,
                            const ConvexModelSet& set_pi,
                            const InvarianceMap& phi, const Matrix& pi0,
                            double step);

struct InequalityRecord {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  bool holds = false;
};

struct BoundReport {
  double epsilon_lower = 0.0;
  std::optional<double> epsilon_upper;
  std::string epsilon_provenance;  // "panel" or "panel+grid"
  InequalityRecord main_theorem;
  InequalityRecord improvement_corollary;
  InequalityRecord two_sided_left;
  InequalityRecord two_sided_right;
  std::optional<InequalityRecord> strong_convexity;
  std::optional<InequalityRecord> main_theorem_grid;  // with epsilon_upper
  double smallest_main_constant = 0.0;  // smallest c for which (i) holds
  std::vector<Eigen::Index> untouched_orbits;
};

/// Evaluates every empirical-projection inequality at 1e-8 slack, using the
/// epsilon lower estimate (sound "holds" verdicts) and, when available, the
/// grid upper bound (sound "violated" verdicts).
BoundReport empirical_bound_report(
    const GeneratorSpec& gen, const PromptDistribution& dist,
    const PromptSample& sample, const ConvexModelSet& set_pi,
    const InvarianceMap& phi, const Matrix& pi0, const Matrix& pi_star,
    int panel_size = 16, std::optional<double> lipschitz_pi_star = std::nullopt,
    std::optional<double> grid_step = std::nullopt,
    const SolverOptions& opts = {});

}  // namespace coherence

#endif  // COHERENCE_EMPIRICAL_HPP_
