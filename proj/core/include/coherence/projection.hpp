#ifndef COHERENCE_PROJECTION_HPP_
#define COHERENCE_PROJECTION_HPP_

#include <vector>

#include "coherence/coherence.hpp"
#include "coherence/solver.hpp"

namespace coherence {

/// Bregman projection of `source` onto the set under the expected
/// divergence. Thin wrapper over the weighted solver.
SolveResult bregman_project(const GeneratorSpec& gen,
                            const PromptDistribution& dist,
                            const ConvexModelSet& set, const Matrix& source,
                            const SolverOptions& opts = {});

/// Direct projection onto Pi intersected with the coherence set: the orbit
/// partition of phi is folded into the set as block constraints.
SolveResult direct_projection(const GeneratorSpec& gen,
                              const PromptDistribution& dist,
                              const InvarianceMap& phi,
                              const ConvexModelSet& set_pi, const Matrix& pi0,
                              const SolverOptions& opts = {});

struct TwoStepResult {
  Matrix final;
  Matrix intermediate;  // orbit average, unnormalized in general
  SolveReport report;
};

/// First project onto the coherent cone (closed-form orbit centroid), then
/// onto Pi ^ C_coh.
TwoStepResult two_step_projection(const GeneratorSpec& gen,
                                  const PromptDistribution& dist,
                                  const InvarianceMap& phi,
                                  const ConvexModelSet& set_pi,
                                  const Matrix& pi0,
                                  const SolverOptions& opts = {});

/// max-abs difference between the direct and two-step outputs.
double equivalence_residual(const GeneratorSpec& gen,
                            const PromptDistribution& dist,
                            const InvarianceMap& phi,
                            const ConvexModelSet& set_pi, const Matrix& pi0,
                            const SolverOptions& opts = {});

/// Improv_{pi*}(pi) = E[B(pi*||pi0)] - E[B(pi*||pi)].
double improvement(const GeneratorSpec& gen, const PromptDistribution& dist,
                   const Matrix& pi_star, const Matrix& pi0, const Matrix& pi);

/// E[B(ref||source)] - E[B(ref||projected)] - E[B(projected||source)];
/// nonnegative for convex sets, zero on affine ones.
double pythagorean_residual(const GeneratorSpec& gen,
                            const PromptDistribution& dist,
                            const Matrix& pi_ref, const Matrix& projected,
                            const Matrix& source);

/// The conjugate Jensen gap of the two-step bound; nonnegative.
double two_step_delta(const GeneratorSpec& gen, const PromptDistribution& dist,
                      const InvarianceMap& phi, const Matrix& pi0);

/// Squared Hellinger distance 1 - sum_k sqrt(p_k q_k).
double squared_hellinger(const Vector& p, const Vector& q);

/// E[ 2 min(lambda, 1-lambda) Hell^2(pi0(x) || pi0(Phi(x))) ]: the log-loss
/// improvement floor of the relative-entropy two-step projection.
double hellinger_improvement_floor(const PromptDistribution& dist,
                                   const InvarianceMap& phi,
                                   const Matrix& pi0);

/// Worst-case-reference gap of the two-step output against a candidate
/// panel: min_{ref in panel} Improv_ref(two_step) minus the best candidate's
/// own worst-case value. Nonnegative up to panel resolution.
double maximin_gap(const GeneratorSpec& gen, const PromptDistribution& dist,
                   const InvarianceMap& phi, const ConvexModelSet& set_pi,
                   const Matrix& pi0, const Matrix& candidate,
                   const std::vector<Matrix>& panel,
                   const SolverOptions& opts = {});

struct NonRealizableReport {
  double epsilon = 0.0;      // E[B(pi* || proj of pi* onto the coherent set)]
  double d_term = 0.0;       // E[B(pihat || pi0)]
  double improvement = 0.0;  // realized Improv(pihat)
  double floor = 0.0;        // d_term - (2L/mu) sqrt(eps * d_term)
  bool holds = false;
};

/// Improvement floor when the reference is not coherent; needs declared
/// mu and L on the generator.
NonRealizableReport non_realizable_bound(const GeneratorSpec& gen,
                                         const PromptDistribution& dist,
                                         const InvarianceMap& phi,
                                         const ConvexModelSet& set_pi,
                                         const Matrix& pi0,
                                         const Matrix& pi_star,
                                         const SolverOptions& opts = {});

/// set_pi with the orbit blocks of phi folded in.
ConvexModelSet coherent_restriction(const ConvexModelSet& set_pi,
                                    const InvarianceMap& phi);

}  // namespace coherence

#endif  // COHERENCE_PROJECTION_HPP_
