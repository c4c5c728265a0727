#include "coherence/projection.hpp"

#include <cmath>

namespace coherence {

SolveResult bregman_project(const GeneratorSpec& gen,
                            const PromptDistribution& dist,
                            const ConvexModelSet& set, const Matrix& source,
                            const SolverOptions& opts) {
  return bregman_project_weighted(gen, dist.weights, set, source, opts);
}

ConvexModelSet coherent_restriction(const ConvexModelSet& set_pi,
                                    const InvarianceMap& phi) {
  ConvexModelSet set = set_pi;
  const OrbitPartition part = orbit_partition(phi);
  BlockPartition orbit_blocks(part.orbits);
  if (set.block_partition)
    set.block_partition =
        merge_partitions(set.prompts, *set.block_partition, orbit_blocks);
  else
    set.block_partition = orbit_blocks;
  return set;
}

SolveResult direct_projection(const GeneratorSpec& gen,
                              const PromptDistribution& dist,
                              const InvarianceMap& phi,
                              const ConvexModelSet& set_pi, const Matrix& pi0,
                              const SolverOptions& opts) {
  return bregman_project(gen, dist, coherent_restriction(set_pi, phi), pi0,
                         opts);
}

TwoStepResult two_step_projection(const GeneratorSpec& gen,
                                  const PromptDistribution& dist,
                                  const InvarianceMap& phi,
                                  const ConvexModelSet& set_pi,
                                  const Matrix& pi0,
                                  const SolverOptions& opts) {
  TwoStepResult out;
  out.intermediate = orbit_average(gen, dist, phi, pi0).table;
  SolveResult second = bregman_project(
      gen, dist, coherent_restriction(set_pi, phi), out.intermediate, opts);
  out.final = std::move(second.table);
  out.report = std::move(second.report);
  return out;
}

double equivalence_residual(const GeneratorSpec& gen,
                            const PromptDistribution& dist,
                            const InvarianceMap& phi,
                            const ConvexModelSet& set_pi, const Matrix& pi0,
                            const SolverOptions& opts) {
  if (!gen.separable() && !gen.quadratic())
    throw DomainError("equivalence_residual: separable or quadratic only");
  const SolveResult direct = direct_projection(gen, dist, phi, set_pi, pi0, opts);
  const TwoStepResult two = two_step_projection(gen, dist, phi, set_pi, pi0, opts);
  return (direct.table - two.final).cwiseAbs().maxCoeff();
}

double improvement(const GeneratorSpec& gen, const PromptDistribution& dist,
                   const Matrix& pi_star, const Matrix& pi0,
                   const Matrix& pi) {
  return expected_divergence(gen, dist, pi_star, pi0) -
         expected_divergence(gen, dist, pi_star, pi);
}

double pythagorean_residual(const GeneratorSpec& gen,
                            const PromptDistribution& dist,
                            const Matrix& pi_ref, const Matrix& projected,
                            const Matrix& source) {
  return expected_divergence(gen, dist, pi_ref, source) -
         expected_divergence(gen, dist, pi_ref, projected) -
         expected_divergence(gen, dist, projected, source);
}

double two_step_delta(const GeneratorSpec& gen, const PromptDistribution& dist,
                      const InvarianceMap& phi, const Matrix& pi0) {
  if (!phi.involution_flag)
    throw NotInvolution("two_step_delta requires an involution");
  KahanSum s;
  for (Eigen::Index x = 0; x < pi0.rows(); ++x) {
    const Eigen::Index y = phi(x);
    if (y == x) continue;  // fixed points contribute zero
    const double lam = lambda_weight(dist, phi, x);
    const Vector u0 = gradient(gen, pi0.row(x).transpose());
    const Vector u1 = gradient(gen, pi0.row(y).transpose());
    const double gap = lam * conjugate_value(gen, u0) +
                       (1.0 - lam) * conjugate_value(gen, u1) -
                       conjugate_value(gen, lam * u0 + (1.0 - lam) * u1);
    s.add(dist[x] * gap);
  }
  return s.value();
}

double squared_hellinger(const Vector& p, const Vector& q) {
  KahanSum s;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0)
      throw DomainError("squared_hellinger: negative component");
    s.add(std::sqrt(p[i] * q[i]));
  }
  return 1.0 - s.value();
}

double hellinger_improvement_floor(const PromptDistribution& dist,
                                   const InvarianceMap& phi,
                                   const Matrix& pi0) {
  if (!phi.involution_flag)
    throw NotInvolution("hellinger_improvement_floor requires an involution");
  if ((pi0.array() <= 0.0).any())
    throw DomainError("hellinger_improvement_floor: rows must be positive");
  KahanSum s;
  for (Eigen::Index x = 0; x < pi0.rows(); ++x) {
    const Eigen::Index y = phi(x);
    if (y == x) continue;
    const double lam = lambda_weight(dist, phi, x);
    const double hell =
        squared_hellinger(pi0.row(x).transpose(), pi0.row(y).transpose());
    s.add(dist[x] * 2.0 * std::min(lam, 1.0 - lam) * hell);
  }
  return s.value();
}

double maximin_gap(const GeneratorSpec& gen, const PromptDistribution& dist,
                   const InvarianceMap& phi, const ConvexModelSet& set_pi,
                   const Matrix& pi0, const Matrix& candidate,
                   const std::vector<Matrix>& panel,
                   const SolverOptions& opts) {
  if (gen.kind != GeneratorKind::SquaredEuclidean &&
      gen.kind != GeneratorKind::NegativeEntropy &&
      gen.kind != GeneratorKind::Mahalanobis)
    throw DomainError("maximin_gap: jointly convex generator kinds only");
  const TwoStepResult two = two_step_projection(gen, dist, phi, set_pi, pi0, opts);

  auto inner_min = [&](const Matrix& pi) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& ref : panel)
      best = std::min(best, improvement(gen, dist, ref, pi0, pi));
    return best;
  };

  double best_candidate = inner_min(candidate);
  for (const auto& cand : panel)
    best_candidate = std::max(best_candidate, inner_min(cand));
  return inner_min(two.final) - best_candidate;
}

NonRealizableReport non_realizable_bound(const GeneratorSpec& gen,
                                         const PromptDistribution& dist,
                                         const InvarianceMap& phi,
                                         const ConvexModelSet& set_pi,
                                         const Matrix& pi0,
                                         const Matrix& pi_star,
                                         const SolverOptions& opts) {
  const double mu = gen.require_mu();
  const double smooth = gen.require_smoothness();
  NonRealizableReport out;
  const SolveResult proj_star =
      direct_projection(gen, dist, phi, set_pi, pi_star, opts);
  out.epsilon = expected_divergence(gen, dist, pi_star, proj_star.table);
  const SolveResult proj0 = direct_projection(gen, dist, phi, set_pi, pi0, opts);
  out.d_term = expected_divergence(gen, dist, proj0.table, pi0);
  out.improvement = improvement(gen, dist, pi_star, pi0, proj0.table);
  out.floor = out.d_term -
              (2.0 * smooth / mu) * std::sqrt(out.epsilon * out.d_term);
  out.holds = out.improvement >= out.floor - 1e-6;
  return out;
}

}  // namespace coherence
