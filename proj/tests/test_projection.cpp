#include <doctest.h>

#include <cmath>

#include "coherence/projection.hpp"
#include "coherence/rng.hpp"

using namespace coherence;

namespace {

Vector simplex_row(SplitMix64& rng, Eigen::Index d) {
  Vector v(d);
  double s = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    v[i] = 0.08 + rng.uniform();
    s += v[i];
  }
  return v / s;
}

}  // namespace

TEST_CASE("bregman_project: source already feasible") {
  const ConvexModelSet set = ConvexModelSet::simplex_product(2, 2);
  Matrix source(2, 2);
  source << 0.3, 0.7, 0.6, 0.4;
  const SolveResult res = bregman_project(
      squared_euclidean(), PromptDistribution::uniform(2), set, source);
  CHECK(res.report.status == "already_in_set");
  CHECK(res.report.iterations == 0);
  CHECK((res.table - source).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("bregman_project: capped concatenated geometry (1-D oracle)") {
  // Coherent projection under the first skewed diagonal generator with the
  // cap q1 <= 1/2: the unconstrained centroid 11/13 violates the cap, so the
  // solution saturates it.
  const double m = 10.0;
  Vector diag(6);
  diag << m, 1, 1, 1, 1, 1;
  const GeneratorSpec gen = diagonal_quadratic(diag);
  Matrix pi0(1, 6);
  pi0 << 1, 0, 0, 0, 1, 0;
  ConvexModelSet set = ConvexModelSet::cube_product(1, 6);
  // Per-prompt simplex sums plus the coherence equalities of the swap.
  Matrix sum1 = Matrix::Zero(1, 6), sum2 = Matrix::Zero(1, 6);
  sum1(0, 0) = sum1(0, 1) = sum1(0, 2) = 1.0;
  sum2(0, 3) = sum2(0, 4) = sum2(0, 5) = 1.0;
  set.with_affine(sum1, 1.0).with_affine(sum2, 1.0);
  for (int j = 0; j < 3; ++j) {
    Matrix eq = Matrix::Zero(1, 6);
    eq(0, j) = 1.0;
    eq(0, j + 3) = -1.0;
    set.with_affine(eq, 0.0);
  }
  set.with_cap(0, 0, 0.5);

  const SolveResult res =
      bregman_project_weighted(gen, Vector::Ones(1), set, pi0, {});
  Vector expect(6);
  expect << 0.5, 0.5, 0.0, 0.5, 0.5, 0.0;
  CHECK((res.table.row(0).transpose() - expect).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(res.report.kkt_residual <= 1e-8);

  // Uncapped, the centroid (M+1)/(M+3) = 11/13 is feasible and optimal.
  ConvexModelSet loose = ConvexModelSet::cube_product(1, 6);
  loose.with_affine(sum1, 1.0).with_affine(sum2, 1.0);
  for (int j = 0; j < 3; ++j) {
    Matrix eq = Matrix::Zero(1, 6);
    eq(0, j) = 1.0;
    eq(0, j + 3) = -1.0;
    loose.with_affine(eq, 0.0);
  }
  const SolveResult free_res =
      bregman_project_weighted(gen, Vector::Ones(1), loose, pi0, {});
  CHECK(free_res.table(0, 0) == doctest::Approx(11.0 / 13.0).epsilon(1e-9));
}

TEST_CASE("direct projection: golden block examples") {
  SUBCASE("quadratic generators reduce to the orbit average") {
    SplitMix64 rng(8);
    const InvarianceMap phi({1, 0, 3, 2});
    Vector w(4);
    for (int i = 0; i < 4; ++i) w[i] = 0.1 + rng.uniform();
    const PromptDistribution dist(Vector(w / w.sum()));
    Matrix pi0(4, 3);
    for (int i = 0; i < 4; ++i) pi0.row(i) = simplex_row(rng, 3).transpose();
    const SolveResult direct = direct_projection(
        squared_euclidean(), dist, phi,
        ConvexModelSet::simplex_product(4, 3), pi0);
    const Matrix avg = orbit_average(squared_euclidean(), dist, phi, pi0).table;
    CHECK((direct.table - avg).cwiseAbs().maxCoeff() <= 1e-10);
  }

  SUBCASE("asymmetric baseline block means") {
    const PromptDistribution uniform = PromptDistribution::uniform(4);
    Matrix pi0(4, 1);
    pi0 << 0.1, 0.3, 0.9, 0.5;
    ConvexModelSet set = ConvexModelSet::cube_product(4, 1);
    set.with_blocks(BlockPartition({{0, 1}, {2, 3}}));
    const SolveResult res = bregman_project(squared_euclidean(), uniform, set,
                                            pi0);
    Matrix expect(4, 1);
    expect << 0.20, 0.20, 0.70, 0.70;
    CHECK((res.table - expect).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("direct projection: entropy with blocks matches the grid oracle") {
  const InvarianceMap phi = InvarianceMap::swap(2, 0, 1);
  const PromptDistribution uniform = PromptDistribution::uniform(2);
  Matrix pi0(2, 2);
  pi0 << 0.1, 0.9, 0.8, 0.2;
  const SolveResult res = direct_projection(
      negative_entropy(), uniform, phi, ConvexModelSet::simplex_product(2, 2),
      pi0);
  // Normalized geometric mean, exact value (0.4, 0.6).
  CHECK(res.table(0, 0) == doctest::Approx(0.4).epsilon(1e-10));
  CHECK(res.table(1, 1) == doctest::Approx(0.6).epsilon(1e-10));
}

TEST_CASE("two-step equals direct for separable and quadratic kinds") {
  SplitMix64 seeder(314);
  for (int it = 0; it < 25; ++it) {
    SplitMix64 rng(seeder.next_u64());
    const Eigen::Index n = 4, d = 3;
    const InvarianceMap phi({1, 0, 3, 2});
    Vector w(n);
    for (Eigen::Index i = 0; i < n; ++i) w[i] = 0.15 + rng.uniform();
    const PromptDistribution dist(Vector(w / w.sum()));
    Matrix pi0(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
      pi0.row(i) = simplex_row(rng, d).transpose();
    ConvexModelSet set = ConvexModelSet::simplex_product(n, d);
    if (it % 2 == 0) set.with_cap(0, 0, 0.45);

    for (const auto& gen : {negative_entropy(), squared_euclidean(),
                            negative_log()}) {
      CHECK(equivalence_residual(gen, dist, phi, set, pi0) <= 1e-7);
    }

    Matrix b(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) b(i, j) = 2.0 * rng.uniform() - 1.0;
    const GeneratorSpec mah =
        mahalanobis(b.transpose() * b / d + Matrix::Identity(d, d));
    CHECK(equivalence_residual(mah, dist, phi, set, pi0) <= 1e-7);
  }
}

TEST_CASE("improvement: concatenated counterexample value") {
  // Single-prompt encoding of the two-prompt skewed geometry: with M = 10
  // the minimax point is worse than the baseline by exactly (M-5)/8.
  Vector diag(6);
  diag << 1, 1, 1, 1, 10, 1;
  const GeneratorSpec gen = diagonal_quadratic(diag);
  const PromptDistribution one = PromptDistribution::uniform(1);
  Matrix star(1, 6), base(1, 6), mm(1, 6);
  star << 0, 1, 0, 0, 1, 0;
  base << 1, 0, 0, 0, 1, 0;
  mm << 0.5, 0.5, 0, 0.5, 0.5, 0;
  CHECK(improvement(gen, one, star, base, mm) == doctest::Approx(-0.625));
  CHECK(improvement(gen, one, star, base, base) == 0.0);
}

TEST_CASE("pythagorean residual") {
  const PromptDistribution uniform = PromptDistribution::uniform(2);
  const InvarianceMap phi = InvarianceMap::swap(2, 0, 1);
  Matrix pi0(2, 2);
  pi0 << 0.15, 0.85, 0.7, 0.3;
  const ConvexModelSet set = ConvexModelSet::simplex_product(2, 2);
  const SolveResult proj =
      direct_projection(negative_entropy(), uniform, phi, set, pi0);

  Matrix ref(2, 2);
  ref << 0.35, 0.65, 0.35, 0.65;
  const double res = pythagorean_residual(negative_entropy(), uniform, ref,
                                          proj.table, pi0);
  CHECK(std::abs(res) <= 1e-9);  // blocks-only geometry: equality
  CHECK(pythagorean_residual(negative_entropy(), uniform, proj.table,
                             proj.table, pi0) == doctest::Approx(0.0));

  // Active cap keeps the inequality direction only.
  ConvexModelSet capped = ConvexModelSet::simplex_product(2, 2);
  capped.with_cap(0, 0, 0.3);
  const SolveResult proj2 =
      direct_projection(negative_entropy(), uniform, phi, capped, pi0);
  Matrix ref2(2, 2);
  ref2 << 0.2, 0.8, 0.2, 0.8;
  CHECK(pythagorean_residual(negative_entropy(), uniform, ref2, proj2.table,
                             pi0) >= -1e-9);
}

TEST_CASE("two-step delta and Hellinger floor: hand values") {
  const InvarianceMap phi = InvarianceMap::swap(2, 0, 1);
  const PromptDistribution uniform = PromptDistribution::uniform(2);
  Matrix pi0(2, 2);
  pi0 << 0.1, 0.9, 0.8, 0.2;
  const double hand = 1.0 - std::sqrt(0.08) - std::sqrt(0.18);
  CHECK(two_step_delta(negative_entropy(), uniform, phi, pi0) ==
        doctest::Approx(hand).epsilon(1e-12));
  CHECK(hellinger_improvement_floor(uniform, phi, pi0) ==
        doctest::Approx(hand).epsilon(1e-12));
  CHECK(squared_hellinger(pi0.row(0).transpose(), pi0.row(1).transpose()) ==
        doctest::Approx(hand).epsilon(1e-12));

  // Coherent baseline: both vanish.
  Matrix coh = Matrix::Constant(2, 2, 0.5);
  CHECK(two_step_delta(negative_entropy(), uniform, phi, coh) ==
        doctest::Approx(0.0));
  CHECK(hellinger_improvement_floor(uniform, phi, coh) == doctest::Approx(0.0));

  // Quadratic generators: delta has the closed quadratic form.
  SplitMix64 rng(5150);
  Matrix b(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) b(i, j) = 2.0 * rng.uniform() - 1.0;
  const Matrix a = b.transpose() * b + Matrix::Identity(2, 2);
  const GeneratorSpec mah = mahalanobis(a);
  const double lam = 0.5;
  const Vector diff = (pi0.row(0) - pi0.row(1)).transpose();
  const double expect = 0.5 * lam * (1.0 - lam) * diff.dot(a * diff);
  CHECK(two_step_delta(mah, uniform, phi, pi0) ==
        doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("two-step bound and ordering on a random instance") {
  SplitMix64 rng(2718);
  const Eigen::Index n = 4, d = 3;
  const InvarianceMap phi({1, 0, 3, 2});
  Vector w(n);
  for (Eigen::Index i = 0; i < n; ++i) w[i] = 0.2 + rng.uniform();
  const PromptDistribution dist(Vector(w / w.sum()));
  Matrix pi0(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    pi0.row(i) = simplex_row(rng, d).transpose();
  const ConvexModelSet set = ConvexModelSet::simplex_product(n, d);
  const GeneratorSpec gen = negative_entropy();

  Matrix star(n, d);
  const Vector srow = simplex_row(rng, d);
  for (Eigen::Index i = 0; i < n; ++i) star.row(i) = srow.transpose();

  const TwoStepResult two = two_step_projection(gen, dist, phi, set, pi0);
  CHECK(is_coherent(two.intermediate, phi, 1e-12));
  const double improv = improvement(gen, dist, star, pi0, two.final);
  const double hop1 =
      expected_divergence(gen, dist, two.final, two.intermediate);
  const double hop0 =
      expected_divergence(gen, dist, two.intermediate, pi0);
  const double delta = two_step_delta(gen, dist, phi, pi0);
  CHECK(delta >= -1e-12);
  CHECK(improv >= hop1 + hop0 - 1e-8);
  CHECK(improv >= hop1 + delta - 1e-8);
  CHECK(delta >= hop0 - 1e-10);  // conjugate gap dominates the first hop

  const SolveResult direct = direct_projection(gen, dist, phi, set, pi0);
  CHECK((direct.table - two.final).cwiseAbs().maxCoeff() <= 1e-7);
  const double dterm = expected_divergence(gen, dist, direct.table, pi0);
  CHECK(dterm >= hop1 + hop0 - 1e-8);
}

TEST_CASE("identity map: two-step returns the plain projection") {
  const InvarianceMap id = InvarianceMap::identity(2);
  const PromptDistribution uniform = PromptDistribution::uniform(2);
  Matrix pi0(2, 2);
  pi0 << 0.3, 0.7, 0.9, 0.1;
  ConvexModelSet set = ConvexModelSet::simplex_product(2, 2);
  set.with_cap(1, 0, 0.5);
  const TwoStepResult two =
      two_step_projection(negative_entropy(), uniform, id, set, pi0);
  CHECK((two.intermediate - pi0).cwiseAbs().maxCoeff() == 0.0);
  const SolveResult plain =
      bregman_project(negative_entropy(), uniform, set, pi0);
  CHECK((two.final - plain.table).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("solver cross-checks: mirror descent and Frank-Wolfe") {
  SplitMix64 rng(1123);
  const Eigen::Index n = 3, d = 3;
  const PromptDistribution dist = PromptDistribution::uniform(n);
  Matrix pi0(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    pi0.row(i) = simplex_row(rng, d).transpose();
  ConvexModelSet set = ConvexModelSet::simplex_product(n, d);
  set.with_cap(0, 1, 0.4);
  set.with_blocks(BlockPartition({{0, 2}, {1}}));

  for (const auto& gen : {negative_entropy(), squared_euclidean()}) {
    const SolveResult newton = bregman_project(gen, dist, set, pi0);

    SolverOptions md;
    md.algorithm = Algorithm::MirrorDescent;
    const SolveResult mirror = bregman_project(gen, dist, set, pi0, md);
    CHECK((mirror.table - newton.table).cwiseAbs().maxCoeff() <= 1e-8);

    SolverOptions fw;
    fw.algorithm = Algorithm::FrankWolfe;
    fw.max_iter = 20000;
    fw.tol_obj = 1e-12;
    const SolveResult wolfe = bregman_project(gen, dist, set, pi0, fw);
    CHECK((wolfe.table - newton.table).cwiseAbs().maxCoeff() <= 1e-3);
  }
}

TEST_CASE("random geometry stress: engines agree across constraint shapes") {
  SplitMix64 seeder(424242);
  for (int it = 0; it < 24; ++it) {
    SplitMix64 rng(seeder.next_u64());
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform_index(3));
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.uniform_index(3));
    Vector w(n);
    for (Eigen::Index i = 0; i < n; ++i) w[i] = 0.15 + rng.uniform();
    const PromptDistribution dist(Vector(w / w.sum()));
    Matrix pi0(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
      pi0.row(i) = simplex_row(rng, d).transpose();

    // A feasible anchor keeps caps and affine rows consistent.
    Matrix anchor(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
      anchor.row(i) = simplex_row(rng, d).transpose();
    ConvexModelSet set = ConvexModelSet::simplex_product(n, d);
    if (rng.uniform() < 0.7) {
      const Eigen::Index x = static_cast<Eigen::Index>(rng.uniform_index(n));
      const Eigen::Index y = static_cast<Eigen::Index>(rng.uniform_index(d));
      set.with_cap(x, y, std::min(1.0, anchor(x, y) + 0.05));
    }
    const bool with_affine = rng.uniform() < 0.5;
    if (with_affine) {
      Matrix coeffs(n, d);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
          coeffs(i, j) = 2.0 * rng.uniform() - 1.0;
      set.with_affine(coeffs, (coeffs.array() * anchor.array()).sum());
    }
    if (rng.uniform() < 0.5 && n >= 3) {
      std::vector<std::vector<Eigen::Index>> blocks = {{0, 2}, {1}};
      for (Eigen::Index i = 3; i < n; ++i) blocks.push_back({i});
      set.with_blocks(BlockPartition(blocks));
    }

    const GeneratorSpec gen =
        it % 2 == 0 ? negative_entropy() : squared_euclidean();
    SolveResult newton;
    try {
      newton = bregman_project(gen, dist, set, pi0);
    } catch (const Infeasible&) {
      continue;  // anchor-based sets are rarely empty; skip if so
    }
    CHECK(contains(set, newton.table, 1e-8));
    CHECK(newton.report.kkt_residual <= 1e-7);

    SolverOptions md;
    md.algorithm = Algorithm::MirrorDescent;
    md.max_iter = 200000;
    const SolveResult mirror = bregman_project(gen, dist, set, pi0, md);
    const double f_newton =
        expected_divergence(gen, dist, newton.table, pi0);
    const double f_mirror =
        expected_divergence(gen, dist, mirror.table, pi0);
    // The active-set result must not be beaten by the first-order engine.
    CHECK(f_newton <= f_mirror + 1e-8);
    CHECK((newton.table - mirror.table).cwiseAbs().maxCoeff() <= 1e-4);
  }
}

TEST_CASE("non-realizable floor reports a sound verdict") {
  SplitMix64 rng(808);
  const Eigen::Index n = 4, d = 3;
  const InvarianceMap phi({1, 0, 3, 2});
  const PromptDistribution dist = PromptDistribution::uniform(n);
  Matrix pi0(n, d), star(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    pi0.row(i) = simplex_row(rng, d).transpose();
    star.row(i) = simplex_row(rng, d).transpose();  // generically incoherent
  }
  Matrix b(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) b(i, j) = 2.0 * rng.uniform() - 1.0;
  const GeneratorSpec gen =
      mahalanobis(b.transpose() * b / d + Matrix::Identity(d, d));
  const NonRealizableReport rep = non_realizable_bound(
      gen, dist, phi, ConvexModelSet::simplex_product(n, d), pi0, star);
  CHECK(rep.epsilon >= 0.0);
  CHECK(rep.d_term >= 0.0);
  CHECK(rep.holds);
  CHECK(rep.improvement >= rep.floor - 1e-6);
}
