#include <doctest.h>

#include <cmath>

#include "coherence/harness.hpp"
#include "coherence/suites.hpp"

using namespace coherence;

TEST_CASE("minimax counterexample: gap formula and verdicts") {
  const MinimaxReport m10 = minimax_counterexample(10.0);
  CHECK(m10.ok);
  CHECK(m10.gap == doctest::Approx(0.625).epsilon(1e-14));
  CHECK(m10.violation);
  CHECK(m10.solved_q1 == doctest::Approx(0.5).epsilon(1e-10));

  const MinimaxReport m5 = minimax_counterexample(5.0);
  CHECK(m5.ok);
  CHECK(m5.gap == doctest::Approx(0.0));
  CHECK_FALSE(m5.violation);

  const MinimaxReport m2 = minimax_counterexample(2.0);
  CHECK(m2.ok);
  CHECK(m2.gap == doctest::Approx(-0.375));
  CHECK_FALSE(m2.violation);

  CHECK_THROWS_AS(minimax_counterexample(0.5), DomainError);
}

TEST_CASE("reversed Jensen: witness for Itakura-Saito, none for convex kinds") {
  const auto is_witness = reversed_jensen_witness(negative_log(), 100000, 9);
  REQUIRE(is_witness.has_value());
  CHECK(is_witness->lhs > is_witness->rhs + 1e-9);
  // Re-verify with a fresh divergence evaluation.
  const Vector mix =
      is_witness->lambda * is_witness->q1 +
      (1.0 - is_witness->lambda) * is_witness->q2;
  const double lhs = divergence(negative_log(), is_witness->p_star, mix);
  const double rhs =
      is_witness->lambda *
          divergence(negative_log(), is_witness->p_star, is_witness->q1) +
      (1.0 - is_witness->lambda) *
          divergence(negative_log(), is_witness->p_star, is_witness->q2);
  CHECK(lhs > rhs + 1e-9);

  CHECK_FALSE(reversed_jensen_witness(squared_euclidean(), 100000, 9)
                  .has_value());
  CHECK_FALSE(reversed_jensen_witness(negative_entropy(), 100000, 9)
                  .has_value());
}

TEST_CASE("orbit infeasibility witness") {
  const InvarianceMap phi = InvarianceMap::swap(2, 0, 1);
  const PromptDistribution uniform = PromptDistribution::uniform(2);
  ConvexModelSet set = ConvexModelSet::simplex_product(2, 3);
  set.with_cap(0, 0, 0.5).with_cap(1, 0, 0.5);

  Matrix pi0(2, 3);
  pi0 << 0.9, 0.05, 0.05, 0.3, 0.5, 0.2;  // orbit mean violates the cap
  const InfeasibilityWitnessReport rep =
      orbit_infeasibility_witness(set, uniform, phi, pi0);
  CHECK(rep.applicable);
  CHECK(rep.candidates > 0);
  CHECK(rep.min_margin > 0.0);

  Matrix tame(2, 3);
  tame << 0.4, 0.4, 0.2, 0.2, 0.5, 0.3;
  CHECK_FALSE(orbit_infeasibility_witness(set, uniform, phi, tame).applicable);
}

TEST_CASE("level-set partition") {
  Matrix pi(4, 1);
  pi << 0.2, 0.2, 0.7, 0.7;
  const BlockPartition part = level_set_partition(pi, 1e-9);
  CHECK(part.count() == 2);
  CHECK(part.blocks[0] == std::vector<Eigen::Index>{0, 1});
  CHECK(part.blocks[1] == std::vector<Eigen::Index>{2, 3});
}

TEST_CASE("characterization: projections refound, baseline trivial") {
  const PromptDistribution uniform = PromptDistribution::uniform(3);
  const ConvexModelSet cube = ConvexModelSet::cube_product(3, 1);
  Matrix tied(3, 1);
  tied << 0.5, 0.5, 0.2;
  const CharacterizationResult triv = single_f_characterization_check(
      squared_euclidean(), uniform, cube, tied, tied);
  CHECK(triv.inequality_holds);
  CHECK(triv.value <= 1e-12);
  CHECK(std::abs(triv.strictness_inf_estimate) <= 1e-12);

  // A corner far from the baseline fails the inequality.
  const ConvexModelSet simplex = ConvexModelSet::simplex_product(3, 2);
  Matrix pi0(3, 2);
  pi0 << 0.5, 0.5, 0.4, 0.6, 0.7, 0.3;
  Matrix corner(3, 2);
  corner << 1, 0, 1, 0, 1, 0;
  const CharacterizationResult bad = single_f_characterization_check(
      squared_euclidean(), uniform, simplex, pi0, corner);
  CHECK_FALSE(bad.inequality_holds);
  CHECK(bad.value > 0.0);
}

TEST_CASE("rigidity toy examples all reproduce") {
  const SuiteReport rep = rigidity_affine_examples();
  for (const auto& c : rep.checks) {
    INFO(c.name, " value=", c.value, " tol=", c.tolerance);
    CHECK(c.passed);
  }
}

TEST_CASE("four-point residual: zero on affine geometry") {
  const PromptDistribution uniform = PromptDistribution::uniform(4);
  Matrix pi0(4, 1);
  pi0 << 0.1, 0.3, 0.9, 0.5;
  ConvexModelSet set = ConvexModelSet::cube_product(4, 1);
  set.with_blocks(BlockPartition({{0, 1}, {2, 3}}));
  CHECK(std::abs(four_point_residual(squared_euclidean(), negative_entropy(),
                                     uniform, set, pi0)) <= 1e-8);
  CHECK(std::abs(four_point_residual(negative_entropy(), negative_entropy(),
                                     uniform, set, pi0)) <= 1e-14);
}

TEST_CASE("kernel circle: solved projections and feature affinity") {
  Vector pi0(2);
  pi0 << 1.0, 0.5;
  const Vector p_sq = project_unit_circle(squared_euclidean(), pi0);
  CHECK(p_sq[0] == doctest::Approx(2.0 / std::sqrt(5.0)).epsilon(1e-9));
  CHECK(p_sq[1] == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-9));
  CHECK(p_sq[0] * p_sq[0] + p_sq[1] * p_sq[1] ==
        doctest::Approx(1.0).epsilon(1e-12));

  // Grid oracle for the weighted generator: the solved minimizer must beat
  // every sampled arc point.
  Vector wdiag(2);
  wdiag << 1.0, 10.0;
  const GeneratorSpec gen = diagonal_quadratic(wdiag);
  const Vector p_w = project_unit_circle(gen, pi0);
  const double solved = divergence(gen, p_w, pi0);
  for (double theta = 0.0; theta <= 1.5707; theta += 1e-4) {
    Vector p(2);
    p << std::cos(theta), std::sin(theta);
    CHECK(solved <= divergence(gen, p, pi0) + 1e-9);
  }
}

TEST_CASE("suite registry") {
  CHECK(suite_names().size() == 12);
  CHECK_THROWS_AS(run_suite("not-a-suite"), UnknownSuite);

  SuiteOptions opts;
  opts.jobs = 2;
  const SuiteReport minimax = run_suite("minimax", opts);
  CHECK(minimax.passed());
  const SuiteReport rigidity = run_suite("rigidity", opts);
  CHECK(rigidity.passed());
}
