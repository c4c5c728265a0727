#include <doctest.h>

#include <cmath>

#include "coherence/empirical.hpp"
#include "coherence/rng.hpp"

using namespace coherence;

namespace {

Matrix stochastic(SplitMix64& rng, Eigen::Index n, Eigen::Index d) {
  Matrix m(n, d);
  for (Eigen::Index x = 0; x < n; ++x) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      m(x, j) = 0.1 + rng.uniform();
      s += m(x, j);
    }
    m.row(x) /= s;
  }
  return m;
}

}  // namespace

TEST_CASE("sample_prompts: determinism and concentration") {
  const PromptDistribution uniform = PromptDistribution::uniform(4);
  const PromptSample one = sample_prompts(uniform, 1, 7);
  CHECK(one.size() == 1);

  const PromptSample a = sample_prompts(uniform, 1000, 42);
  const PromptSample b = sample_prompts(uniform, 1000, 42);
  CHECK(a.indices == b.indices);
  const PromptSample c = sample_prompts(uniform, 1000, 43);
  CHECK(a.indices != c.indices);

  const PromptSample big = sample_prompts(uniform, 4000, 12345);
  const Vector w = empirical_weights(big, 4);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(w[i] - 0.25) <= 0.03);
}

TEST_CASE("empirical projection: exact-proportion sample equals population") {
  const Eigen::Index n = 2, d = 2;
  const InvarianceMap phi = InvarianceMap::swap(2, 0, 1);
  const PromptDistribution uniform = PromptDistribution::uniform(n);
  SplitMix64 rng(99);
  const Matrix pi0 = stochastic(rng, n, d);
  const ConvexModelSet set = ConvexModelSet::simplex_product(n, d);

  PromptSample sample;
  sample.seed = 0;
  sample.indices = {0, 1, 0, 1};  // exact proportions
  const SolveResult emp =
      empirical_projection(squared_euclidean(), sample, phi, set, pi0);
  const SolveResult pop = direct_projection(squared_euclidean(), uniform, phi,
                                            set, pi0);
  CHECK((emp.table - pop.table).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("empirical projection: one-sided sample degenerates to lambda=1") {
  const Eigen::Index n = 2, d = 2;
  const InvarianceMap phi = InvarianceMap::swap(2, 0, 1);
  SplitMix64 rng(5);
  const Matrix pi0 = stochastic(rng, n, d);
  const ConvexModelSet set = ConvexModelSet::simplex_product(n, d);

  PromptSample sample;
  sample.seed = 0;
  sample.indices = {0, 0, 0};
  const SolveResult emp =
      empirical_projection(squared_euclidean(), sample, phi, set, pi0);
  // The orbit is constrained coherent and the objective sees only prompt 0,
  // so the solution copies pi0(0) across the orbit.
  CHECK((emp.table.row(0) - pi0.row(0)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((emp.table.row(1) - pi0.row(0)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("unsampled orbits are fixed to the restricted projection") {
  const Eigen::Index n = 4, d = 2;
  const InvarianceMap phi({1, 0, 3, 2});
  SplitMix64 rng(6);
  const Matrix pi0 = stochastic(rng, n, d);
  const ConvexModelSet set = ConvexModelSet::simplex_product(n, d);

  PromptSample sample;
  sample.seed = 0;
  sample.indices = {0, 1, 1, 0};  // orbit {2,3} never sampled
  const SolveResult emp =
      empirical_projection(negative_entropy(), sample, phi, set, pi0);
  // Untouched orbit: uniform-weight coherent projection of its pi0 rows,
  // i.e. the normalized geometric mean.
  Vector geo(d);
  for (Eigen::Index j = 0; j < d; ++j)
    geo[j] = std::sqrt(pi0(2, j) * pi0(3, j));
  geo /= geo.sum();
  CHECK((emp.table.row(2).transpose() - geo).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((emp.table.row(3).transpose() - geo).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("epsilon_m: zero for exact proportions, positive for m=1") {
  const Eigen::Index n = 2, d = 2;
  const InvarianceMap phi = InvarianceMap::swap(2, 0, 1);
  const PromptDistribution uniform = PromptDistribution::uniform(n);
  SplitMix64 rng(7);
  const Matrix pi0 = stochastic(rng, n, d);
  const ConvexModelSet set = ConvexModelSet::simplex_product(n, d);

  PromptSample exact;
  exact.seed = 0;
  exact.indices = {0, 1};
  CHECK(epsilon_m_lower(squared_euclidean(), uniform, exact, set, phi, pi0,
                        8) <= 1e-15);

  PromptSample single;
  single.seed = 0;
  single.indices = {0};
  const double lower = epsilon_m_lower(squared_euclidean(), uniform, single,
                                       set, phi, pi0, 8);
  CHECK(lower >= 0.0);

  const double upper = epsilon_m_grid_upper(squared_euclidean(), uniform,
                                            single, set, phi, pi0, 0.02);
  CHECK(upper >= lower - 1e-12);

  // Brute-force oracle over the coherent family with delta = (1/2, -1/2):
  // sup_t |0.5 B(t||pi0(0)) - 0.5 B(t||pi0(1))| over the 1-D simplex grid.
  double oracle = 0.0;
  for (double t = 0.0; t <= 1.0 + 1e-12; t += 1e-4) {
    Vector q(2);
    q << t, 1.0 - t;
    const double dev =
        0.5 * divergence(squared_euclidean(), q, pi0.row(0).transpose()) -
        0.5 * divergence(squared_euclidean(), q, pi0.row(1).transpose());
    oracle = std::max(oracle, std::abs(dev));
  }
  CHECK(upper >= oracle - 1e-9);
  CHECK(lower <= oracle + 1e-9);
}

TEST_CASE("bound report: exact proportions give zero epsilon and tight holds") {
  const Eigen::Index n = 2, d = 2;
  const InvarianceMap phi = InvarianceMap::swap(2, 0, 1);
  const PromptDistribution uniform = PromptDistribution::uniform(n);
  SplitMix64 rng(13);
  const Matrix pi0 = stochastic(rng, n, d);
  const ConvexModelSet set = ConvexModelSet::simplex_product(n, d);

  PromptSample exact;
  exact.seed = 0;
  exact.indices = {0, 1, 0, 1};
  const SolveResult pop = bregman_project(
      squared_euclidean(), uniform, coherent_restriction(set, phi), pi0);
  const BoundReport rep = empirical_bound_report(
      squared_euclidean(), uniform, exact, set, phi, pi0, pop.table);
  CHECK(rep.epsilon_lower <= 1e-14);
  CHECK(rep.main_theorem.holds);
  CHECK(rep.improvement_corollary.holds);
  CHECK(rep.two_sided_left.holds);
  CHECK(rep.two_sided_right.holds);
  CHECK(std::abs(rep.two_sided_left.slack) <= 1e-12);  // pihat_S == pihat
  CHECK(rep.untouched_orbits.empty());
}

TEST_CASE("bound report: inequalities hold on a small instance") {
  const Eigen::Index n = 4, d = 2;
  const InvarianceMap phi({1, 0, 3, 2});
  SplitMix64 rng(11);
  Vector w(n);
  for (Eigen::Index i = 0; i < n; ++i) w[i] = 0.15 + rng.uniform();
  const PromptDistribution dist(Vector(w / w.sum()));
  const Matrix pi0 = stochastic(rng, n, d);
  const ConvexModelSet set = ConvexModelSet::simplex_product(n, d);
  const GeneratorSpec gen = squared_euclidean();

  const PromptSample sample = sample_prompts(dist, 60, 777);
  const SolveResult pop =
      bregman_project(gen, dist, coherent_restriction(set, phi), pi0);

  const BoundReport rep = empirical_bound_report(gen, dist, sample, set, phi,
                                                 pi0, pop.table, 12,
                                                 std::nullopt, 0.02);
  CHECK(rep.main_theorem.holds);
  CHECK(rep.improvement_corollary.holds);
  CHECK(rep.two_sided_left.holds);
  CHECK(rep.two_sided_right.holds);
  REQUIRE(rep.main_theorem_grid.has_value());
  CHECK(rep.main_theorem_grid->holds);
  CHECK(rep.epsilon_upper.has_value());
  CHECK(*rep.epsilon_upper >= rep.epsilon_lower - 1e-12);
  CHECK(rep.smallest_main_constant >= 0.0);

  // Strong-convexity record appears when the Lipschitz constant is supplied.
  const BoundReport rep2 = empirical_bound_report(
      gen, dist, sample, set, phi, pi0, pop.table, 12, 2.0, std::nullopt);
  REQUIRE(rep2.strong_convexity.has_value());
  CHECK(rep2.strong_convexity->holds);
}
