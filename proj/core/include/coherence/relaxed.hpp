#ifndef COHERENCE_RELAXED_HPP_
#define COHERENCE_RELAXED_HPP_

#include "coherence/coherence.hpp"
#include "coherence/solver.hpp"

namespace coherence {

enum class SoftDivergenceKind {
  KLSymmetrized,
  JensenShannon,
  SquaredHellinger,
  SquaredEuclidean,
  TotalVariationSquaredSurrogate,
};

/// A jointly convex, symmetric divergence used in the relaxed coherence
/// constraint, with its strong-convexity constant.
struct SoftDivergenceSpec {
  SoftDivergenceKind kind = SoftDivergenceKind::JensenShannon;
  double mu_d = 0.25;
  NormTag norm_tag = NormTag::L1;

  static SoftDivergenceSpec kl_symmetrized();
  static SoftDivergenceSpec jensen_shannon();
  static SoftDivergenceSpec squared_hellinger();
  static SoftDivergenceSpec squared_euclidean();
  static SoftDivergenceSpec tv_squared_surrogate();
};

double soft_divergence(const SoftDivergenceSpec& spec, const Vector& p,
                       const Vector& q);

/// Gradient in the first argument (the second follows by symmetry).
Vector soft_divergence_grad(const SoftDivergenceSpec& spec, const Vector& p,
                            const Vector& q);

struct RelaxedResult {
  Matrix table;
  double multiplier = 0.0;        // Lagrange multiplier of the Lambda bound
  double constraint_value = 0.0;  // E[D(pi(x), pi(Phi(x)))] at the solution
  SolveReport report;
};

/// min E[B_F(pi||pi0)] over the simplex product subject to
/// E[D(pi(x), pi(Phi(x)))] <= Lambda, solved by bisection on the multiplier
/// of the penalized form. The mu_F / mu_D norms must agree.
RelaxedResult relaxed_project(const GeneratorSpec& gen,
                              const SoftDivergenceSpec& spec, double lambda_cap,
                              const PromptDistribution& dist,
                              const InvarianceMap& phi, const Matrix& pi0,
                              const SolverOptions& opts = {});

/// Penalized form: min E[B_F(pi||pi0)] + penalty * E[D(...)].
RelaxedResult penalized_project(const GeneratorSpec& gen,
                                const SoftDivergenceSpec& spec, double penalty,
                                const PromptDistribution& dist,
                                const InvarianceMap& phi, const Matrix& pi0,
                                const SolverOptions& opts = {});

/// (mu_F / 2) [ sqrt(delta_coh) - sqrt(Lambda / (2 mu_D)) ]_+^2.
double relaxed_improvement_floor(double mu_f, double mu_d, double lambda_cap,
                                 double delta_coh);

}  // namespace coherence

#endif  // COHERENCE_RELAXED_HPP_
