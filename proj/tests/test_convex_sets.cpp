#include <doctest.h>
#include <algorithm>
#include <cmath>

#include "coherence/convex_sets.hpp"
#include "coherence/rng.hpp"

using namespace coherence;

namespace {

Matrix random_table(SplitMix64& rng, Eigen::Index n, Eigen::Index d,
                    bool stochastic) {
  Matrix m(n, d);
  for (Eigen::Index x = 0; x < n; ++x) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      m(x, j) = rng.uniform();
      s += m(x, j);
    }
    if (stochastic) m.row(x) /= s;
  }
  return m;
}

}  // namespace

TEST_CASE("contains: base, caps, affine, blocks") {
  SplitMix64 rng(5);
  const ConvexModelSet simplex = ConvexModelSet::simplex_product(3, 3);
  CHECK(contains(simplex, random_table(rng, 3, 3, true), 1e-9));
  CHECK_FALSE(contains(simplex, Matrix::Constant(3, 3, 0.5), 1e-9));

  ConvexModelSet capped = ConvexModelSet::simplex_product(2, 3);
  capped.with_cap(0, 0, 0.5).with_cap(1, 0, 0.5);
  Matrix peaky(2, 3);
  peaky << 1, 0, 0, 1, 0, 0;
  CHECK_FALSE(contains(capped, peaky, 1e-9));

  ConvexModelSet sum_set = ConvexModelSet::cube_product(3, 1);
  sum_set.with_affine(Matrix::Ones(3, 1), 1.0);
  Matrix heads(3, 1);
  heads << 0.30, 0.30, 0.60;  // sums to 1.20
  CHECK_FALSE(contains(sum_set, heads, 1e-9));

  ConvexModelSet blocky = ConvexModelSet::cube_product(3, 1);
  blocky.with_blocks(BlockPartition({{0, 1}, {2}}));
  Matrix tied(3, 1);
  tied << 0.4, 0.4, 0.9;
  CHECK(contains(blocky, tied, 1e-9));
  tied(1, 0) = 0.5;
  CHECK_FALSE(contains(blocky, tied, 1e-9));
}

TEST_CASE("euclidean_project: golden cases") {
  SUBCASE("already inside") {
    const ConvexModelSet set = ConvexModelSet::simplex_product(2, 2);
    Matrix inside(2, 2);
    inside << 0.5, 0.5, 0.2, 0.8;
    CHECK((euclidean_project(set, inside) - inside).cwiseAbs().maxCoeff() <=
          1e-12);
  }

  SUBCASE("sum constraint shifts coordinates uniformly") {
    ConvexModelSet set = ConvexModelSet::cube_product(3, 1);
    set.with_affine(Matrix::Ones(3, 1), 1.0);
    Matrix z(3, 1);
    z << 0.30, 0.30, 0.60;
    const Matrix p = euclidean_project(set, z);
    CHECK(p(0, 0) == doctest::Approx(0.30 - 0.2 / 3).epsilon(1e-10));
    CHECK(p(1, 0) == doctest::Approx(0.30 - 0.2 / 3).epsilon(1e-10));
    CHECK(p(2, 0) == doctest::Approx(0.60 - 0.2 / 3).epsilon(1e-10));
  }

  SUBCASE("blocks fold to the mean") {
    ConvexModelSet set = ConvexModelSet::cube_product(2, 1);
    set.with_blocks(BlockPartition({{0, 1}}));
    Matrix z(2, 1);
    z << 0.1, 0.8;
    const Matrix p = euclidean_project(set, z);
    CHECK(p(0, 0) == doctest::Approx(0.45));
    CHECK(p(1, 0) == doctest::Approx(0.45));
  }
}

TEST_CASE("euclidean_project: idempotent, nonexpansive, feasible") {
  SplitMix64 rng(17);
  for (int it = 0; it < 50; ++it) {
    ConvexModelSet set = ConvexModelSet::simplex_product(3, 3);
    set.with_cap(0, 0, 0.4);
    Matrix coeffs = random_table(rng, 3, 3, false);
    set.with_affine(coeffs, (coeffs.array() * (1.0 / 3.0)).sum());

    const Matrix a = random_table(rng, 3, 3, false);
    const Matrix b = random_table(rng, 3, 3, false);
    const Matrix pa = euclidean_project(set, a);
    const Matrix pb = euclidean_project(set, b);
    CHECK(contains(set, pa, 1e-8));
    CHECK((euclidean_project(set, pa) - pa).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((pa - pb).norm() <= (a - b).norm() + 1e-10);
  }
}

TEST_CASE("feasible_point") {
  const ConvexModelSet simplex = ConvexModelSet::simplex_product(2, 3);
  const Matrix u = feasible_point(simplex);
  CHECK(u(0, 0) == doctest::Approx(1.0 / 3.0));

  ConvexModelSet capped = ConvexModelSet::simplex_product(2, 3);
  capped.with_cap(0, 0, 0.5);
  CHECK(contains(capped, feasible_point(capped), 1e-9));

  // Contradictory cap and affine requirement.
  ConvexModelSet bad = ConvexModelSet::cube_product(1, 2);
  bad.with_cap(0, 0, 0.1);
  Matrix coeffs(1, 2);
  coeffs << 1.0, 0.0;
  bad.with_affine(coeffs, 0.5);
  CHECK_THROWS_AS(feasible_point(bad), Infeasible);
}

TEST_CASE("capped simplex projection matches the bisection oracle") {
  SplitMix64 rng(2718);
  for (int it = 0; it < 500; ++it) {
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.uniform_index(5));
    Vector z(d), cap(d);
    double capsum = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      z[j] = 3.0 * rng.uniform() - 1.0;
      cap[j] = 0.05 + rng.uniform();
      capsum += cap[j];
    }
    if (capsum < 1.0) continue;
    const Vector q = project_capped_simplex(z, cap);
    CHECK(std::abs(q.sum() - 1.0) <= 1e-12);
    CHECK(q.minCoeff() >= -1e-15);
    CHECK((cap - q).minCoeff() >= -1e-15);

    // Oracle: long bisection on the clipped-sum shift.
    double lo = z.minCoeff() - 2.0, hi = z.maxCoeff() + 1.0;
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (lo + hi);
      double s = 0.0;
      for (Eigen::Index j = 0; j < d; ++j)
        s += std::clamp(z[j] - mid, 0.0, cap[j]);
      (s > 1.0 ? lo : hi) = mid;
    }
    const double tau = 0.5 * (lo + hi);
    Vector oracle(d);
    for (Eigen::Index j = 0; j < d; ++j)
      oracle[j] = std::clamp(z[j] - tau, 0.0, cap[j]);
    CHECK((q - oracle).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("capped simplex projection and row LMO") {
  Vector z(3), cap(3);
  z << 0.9, 0.4, -0.1;
  cap << 0.5, 1.0, 1.0;
  const Vector q = project_capped_simplex(z, cap);
  CHECK(q.sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(q[0] <= 0.5 + 1e-14);
  CHECK(q.minCoeff() >= -1e-14);

  Vector g(3);
  g << 0.3, -1.0, 0.2;
  const Vector lmo = row_linear_minimizer(BaseSet::FullSimplexProduct, g, cap);
  CHECK(lmo[1] == doctest::Approx(1.0));
  Vector g2(3);
  g2 << -2.0, -1.0, 0.5;
  const Vector lmo2 = row_linear_minimizer(BaseSet::FullSimplexProduct, g2, cap);
  CHECK(lmo2[0] == doctest::Approx(0.5));
  CHECK(lmo2[1] == doctest::Approx(0.5));
}

TEST_CASE("merge partitions") {
  const BlockPartition a({{0, 1}, {2}, {3}});
  const BlockPartition b({{1, 2}, {0}, {3}});
  const BlockPartition m = merge_partitions(4, a, b);
  CHECK(m.count() == 2);
  auto id = m.block_of(4);
  CHECK(id[0] == id[1]);
  CHECK(id[1] == id[2]);
  CHECK(id[0] != id[3]);
}
