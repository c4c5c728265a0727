#ifndef COHERENCE_HARNESS_HPP_
#define COHERENCE_HARNESS_HPP_

#include <optional>
#include <string>
#include <vector>

#include "coherence/empirical.hpp"
#include "coherence/projection.hpp"
#include "coherence/relaxed.hpp"

namespace coherence {

/// One verdict inside a suite. Negative controls pass when the expected
/// violation is actually observed.
struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
  bool negative_control = false;
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;
  std::int64_t wall_ns = 0;

  int violations() const {
    int v = 0;
    for (const auto& c : checks)
      if (!c.passed) ++v;
    return v;
  }
  bool passed() const { return violations() == 0; }
};

// --- Minimax counterexample -------------------------------------------------

struct MinimaxReport {
  double m_scale = 0.0;
  Vector pi_mm;        // concatenated 6-vector
  double gap = 0.0;    // B_{F2}(pi* || pi_mm) - B_{F2}(pi* || pi0)
  double gap_formula = 0.0;  // (M - 5) / 8
  double solved_q1 = 0.0;
  bool violation = false;
  bool ok = false;
  std::string detail;
};

/// Two-prompt, three-outcome construction where the minimax projection over
/// a convex generator family fails the Pythagorean improvement condition.
MinimaxReport minimax_counterexample(double m_scale);

// --- Universal improvement and impossibility --------------------------------

/// Checks the orbitwise-average improvement inequality for every generator
/// in the family on random instances; jointly convex families must be clean,
/// non-jointly-convex entries are negative controls.
SuiteReport orbit_average_universal_check(
    const std::vector<GeneratorSpec>& family, int instances,
    std::uint64_t seed);

struct ReversedJensenWitness {
  Vector q1, q2, p_star;
  double lambda = 0.0;
  double lhs = 0.0;  // B(p* || mix)
  double rhs = 0.0;  // lambda B(p*||q1) + (1-lambda) B(p*||q2)
};

/// Search for a reversed-Jensen tuple of the divergence in its second
/// argument. Returns nothing for jointly convex kinds.
std::optional<ReversedJensenWitness> reversed_jensen_witness(
    const GeneratorSpec& gen, int trials, std::uint64_t seed);

struct InfeasibilityWitnessReport {
  bool applicable = false;  // orbit average infeasible for the set
  double min_margin = 0.0;  // worst candidate's best violation; > 0 expected
  int candidates = 0;
  std::string detail;
};

/// When the orbit average is infeasible, every feasible coherent candidate
/// is beaten by some quadratic generator and coherent reference.
InfeasibilityWitnessReport orbit_infeasibility_witness(
    const ConvexModelSet& set_pi, const PromptDistribution& dist,
    const InvarianceMap& phi, const Matrix& pi0);

// --- Characterization and rigidity ------------------------------------------

struct CharacterizationResult {
  bool inequality_holds = false;
  double value = 0.0;  // residual if holds, worst violation otherwise
  double strictness_inf_estimate = 0.0;
};

/// If the mechanism output satisfies the strong improvement inequality over
/// a panel, it must equal the Bregman projection onto the set restricted to
/// its own level-set blocks.
CharacterizationResult single_f_characterization_check(
    const GeneratorSpec& gen, const PromptDistribution& dist,
    const ConvexModelSet& set_pi, const Matrix& pi0,
    const Matrix& mechanism_output, std::uint64_t seed = 7);

/// Level-set partition of a model: prompts with equal rows (within tol).
BlockPartition level_set_partition(const Matrix& pi, double tol);

/// Block, affine-sum and asymmetric-baseline reproductions with their
/// closed-form golden values.
SuiteReport rigidity_affine_examples();

/// A(F, G) = E[<V_F - V_G, pihat_G - pihat_F>] with
/// V_F = gradF(pihat_F) - gradF(pi0); vanishes on affine constraint sets.
double four_point_residual(const GeneratorSpec& gen_f,
                           const GeneratorSpec& gen_g,
                           const PromptDistribution& dist,
                           const ConvexModelSet& affine_set, const Matrix& pi0);

/// Projection onto the positive quadrant of the unit circle by angle
/// parameterization and golden-section search; feature images land on the
/// affine segment z1 + z2 = 1.
SuiteReport kernel_circle_example();

/// Golden-section minimizer of B_F(p(theta) || pi0) on the quarter circle.
Vector project_unit_circle(const GeneratorSpec& gen, const Vector& pi0);

}  // namespace coherence

#endif  // COHERENCE_HARNESS_HPP_
