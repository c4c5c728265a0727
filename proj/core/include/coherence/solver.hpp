#ifndef COHERENCE_SOLVER_HPP_
#define COHERENCE_SOLVER_HPP_

#include <cstdint>
#include <string>

#include "coherence/bregman.hpp"
#include "coherence/convex_sets.hpp"
#include "coherence/generators.hpp"

namespace coherence {

enum class Algorithm { ReducedNewton, MirrorDescent, FrankWolfe };

std::string to_string(Algorithm a);

struct SolverOptions {
  int max_iter = 50000;
  double tol_obj = 1e-12;
  double tol_kkt = 1e-8;
  Algorithm algorithm = Algorithm::ReducedNewton;
  std::uint64_t panel_seed = 0x5EEDC0DEULL;  // random feasible directions
};

struct SolveReport {
  std::string status = "converged";  // converged | already_in_set | iteration_cap
  int iterations = 0;
  double objective = 0.0;
  double kkt_residual = 0.0;
  std::int64_t wall_ns = 0;
  std::string algorithm = "reduced_newton";
};

struct SolveResult {
  Matrix table;
  SolveReport report;
};

/// argmin over the set of sum_x weights[x] B_F(pi(x) || source(x)).
///
/// Weights are nonnegative (zero rows are allowed; they are constrained by
/// the set but carry no objective). Blocks are folded into a reduced
/// representative space; the remaining structure picks the engine:
/// exact rowwise dual solves for separable generators, active-set QP for
/// coupled quadratics, and an active-set method with Newton-on-multipliers
/// subproblems when affine constraints couple the rows. Optimality is
/// certified through the variational inequality over a panel of feasible
/// points; the certified value is reported as kkt_residual.
SolveResult bregman_project_weighted(const GeneratorSpec& gen,
                                     const Vector& weights,
                                     const ConvexModelSet& set,
                                     const Matrix& source,
                                     const SolverOptions& opts = {});

namespace detail {
/// Exact Bregman projection of a dual target onto one row polytope:
/// argmin_{q in base ^ caps} F(q) - <dual_target, q>. Components of
/// dual_target may be -infinity (pinned to zero).
Vector project_row_dual(const GeneratorSpec& gen, const Vector& dual_target,
                        BaseSet base, const Vector& cap);
}  // namespace detail

}  // namespace coherence

#endif  // COHERENCE_SOLVER_HPP_
