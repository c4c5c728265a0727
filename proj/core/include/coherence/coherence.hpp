#ifndef COHERENCE_COHERENCE_HPP_
#define COHERENCE_COHERENCE_HPP_

#include "coherence/generators.hpp"
#include "coherence/types.hpp"

namespace coherence {

/// Cycle decomposition of the prompt permutation.
OrbitPartition orbit_partition(const InvarianceMap& phi);

/// Relative orbit weight P(x) / (P(x) + P(Phi(x))). Involutions only.
double lambda_weight(const PromptDistribution& dist, const InvarianceMap& phi,
                     Eigen::Index x);

/// max_x || pi(x) - pi(Phi(x)) ||_inf <= tol.
bool is_coherent(const Matrix& pi, const InvarianceMap& phi, double tol);

/// Closed-form first-step projection onto the coherent cone: per orbit the
/// right Bregman centroid in dual coordinates. Coherent, nonnegative, and
/// idempotent. Non-involutive finite orbits use the within-orbit normalized
/// weight vector.
UnnormalizedModel orbit_average(const GeneratorSpec& gen,
                                const PromptDistribution& dist,
                                const InvarianceMap& phi, const Matrix& pi0);

/// gamma_0 = E_x || pi0(x) - pi0(Phi(x)) ||^2 with the declared row norm.
double incoherence_gamma0(const PromptDistribution& dist, const Matrix& pi0,
                          const InvarianceMap& phi, NormTag norm_tag);

/// Operator norm of the composition pi -> pi o Phi under the weighted L2
/// norm; exact on finite prompt spaces: max_x sqrt(P(Phi^{-1}(x)) / P(x)).
double composition_operator_norm(const PromptDistribution& dist,
                                 const InvarianceMap& phi);

struct DeltaCohBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// gamma0/(1+C_Phi)^2 <= Delta_coh <= gamma0/4; equality gamma0/4 holds for
/// Phi-invariant distributions (C_Phi = 1).
DeltaCohBounds delta_coh_bounds(double gamma0, double c_phi);

}  // namespace coherence

#endif  // COHERENCE_COHERENCE_HPP_
