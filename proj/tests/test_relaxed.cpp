#include <doctest.h>

#include <cmath>

#include "coherence/relaxed.hpp"
#include "coherence/projection.hpp"
#include "coherence/rng.hpp"

using namespace coherence;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("soft divergences: golden values and symmetry") {
  CHECK(soft_divergence(SoftDivergenceSpec::jensen_shannon(), vec2(0.5, 0.5),
                        vec2(0.5, 0.5)) == doctest::Approx(0.0));
  CHECK(soft_divergence(SoftDivergenceSpec::jensen_shannon(), vec2(1, 0),
                        vec2(0, 1)) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(soft_divergence(SoftDivergenceSpec::squared_hellinger(),
                        vec2(0.1, 0.9), vec2(0.8, 0.2)) ==
        doctest::Approx(1.0 - std::sqrt(0.08) - std::sqrt(0.18))
            .epsilon(1e-12));

  SplitMix64 rng(12);
  const std::vector<SoftDivergenceSpec> kinds = {
      SoftDivergenceSpec::kl_symmetrized(),
      SoftDivergenceSpec::jensen_shannon(),
      SoftDivergenceSpec::squared_hellinger(),
      SoftDivergenceSpec::squared_euclidean(),
      SoftDivergenceSpec::tv_squared_surrogate()};
  for (const auto& spec : kinds)
    for (int it = 0; it < 100; ++it) {
      const double a = 0.05 + 0.9 * rng.uniform();
      const double b = 0.05 + 0.9 * rng.uniform();
      const Vector p = vec2(a, 1 - a), q = vec2(b, 1 - b);
      CHECK(soft_divergence(spec, p, q) ==
            doctest::Approx(soft_divergence(spec, q, p)).epsilon(1e-12));
      CHECK(soft_divergence(spec, p, q) >= -1e-14);
      CHECK(soft_divergence(spec, p, p) == doctest::Approx(0.0));
    }
}

TEST_CASE("soft divergence constants carry the declared strong convexity") {
  CHECK(SoftDivergenceSpec::jensen_shannon().mu_d == doctest::Approx(0.25));
  CHECK(SoftDivergenceSpec::squared_hellinger().mu_d == doctest::Approx(0.25));
  CHECK(SoftDivergenceSpec::kl_symmetrized().mu_d == doctest::Approx(2.0));

  // Spot check D >= (mu/2) ||p-q||^2 with the declared norm.
  SplitMix64 rng(21);
  for (const auto& spec :
       {SoftDivergenceSpec::jensen_shannon(),
        SoftDivergenceSpec::squared_hellinger(),
        SoftDivergenceSpec::kl_symmetrized(),
        SoftDivergenceSpec::squared_euclidean()}) {
    for (int it = 0; it < 200; ++it) {
      const double a = 0.05 + 0.9 * rng.uniform();
      const double b = 0.05 + 0.9 * rng.uniform();
      const Vector p = vec2(a, 1 - a), q = vec2(b, 1 - b);
      const double nrm = spec.norm_tag == NormTag::L1 ? (p - q).lpNorm<1>()
                                                      : (p - q).norm();
      CHECK(soft_divergence(spec, p, q) >=
            0.5 * spec.mu_d * nrm * nrm - 1e-12);
    }
  }
}

TEST_CASE("soft divergence gradients match finite differences") {
  SplitMix64 rng(33);
  for (const auto& spec :
       {SoftDivergenceSpec::kl_symmetrized(),
        SoftDivergenceSpec::jensen_shannon(),
        SoftDivergenceSpec::squared_hellinger(),
        SoftDivergenceSpec::squared_euclidean()}) {
    for (int it = 0; it < 50; ++it) {
      const double a = 0.1 + 0.8 * rng.uniform();
      const double b = 0.1 + 0.8 * rng.uniform();
      const Vector p = vec2(a, 1 - a), q = vec2(b, 1 - b);
      const Vector g = soft_divergence_grad(spec, p, q);
      for (int j = 0; j < 2; ++j) {
        Vector hi = p, lo = p;
        hi[j] += 1e-7;
        lo[j] -= 1e-7;
        const double fd =
            (soft_divergence(spec, hi, q) - soft_divergence(spec, lo, q)) /
            2e-7;
        CHECK(g[j] == doctest::Approx(fd).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("relaxed_project: inactive constraint returns the baseline") {
  const InvarianceMap phi = InvarianceMap::swap(2, 0, 1);
  const PromptDistribution uniform = PromptDistribution::uniform(2);
  Matrix pi0(2, 2);
  pi0 << 0.4, 0.6, 0.45, 0.55;
  const RelaxedResult r = relaxed_project(
      squared_euclidean(), SoftDivergenceSpec::squared_euclidean(), 1.0,
      uniform, phi, pi0);
  CHECK(r.multiplier == 0.0);
  CHECK((r.table - pi0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("relaxed_project: shrinkage oracle with active constraint") {
  const InvarianceMap phi = InvarianceMap::swap(2, 0, 1);
  const PromptDistribution uniform = PromptDistribution::uniform(2);
  Matrix pi0(2, 2);
  pi0 << 0.1, 0.9, 0.8, 0.2;
  const SoftDivergenceSpec soft = SoftDivergenceSpec::squared_euclidean();
  const GeneratorSpec gen = squared_euclidean();

  double c0 = 0.0;
  for (int x = 0; x < 2; ++x)
    c0 += 0.5 * soft_divergence(soft, pi0.row(x).transpose(),
                                pi0.row(1 - x).transpose());
  const double cap = 0.5 * c0;
  const RelaxedResult r = relaxed_project(gen, soft, cap, uniform, phi, pi0);
  CHECK(std::abs(r.constraint_value - cap) <= 1e-9);
  CHECK(r.multiplier > 0.0);
  // Complementary slackness at the returned multiplier.
  CHECK(std::abs(r.multiplier * (r.constraint_value - cap)) <= 1e-7);

  const double t = 1.0 / std::sqrt(2.0);
  const Vector mean = 0.5 * (pi0.row(0) + pi0.row(1)).transpose();
  const Vector half_diff = 0.5 * (pi0.row(0) - pi0.row(1)).transpose();
  CHECK((r.table.row(0).transpose() - (mean + t * half_diff))
            .cwiseAbs()
            .maxCoeff() <= 1e-6);
  CHECK((r.table.row(1).transpose() - (mean - t * half_diff))
            .cwiseAbs()
            .maxCoeff() <= 1e-6);
}

TEST_CASE("relaxed_project: tight cap approaches the coherent projection") {
  const InvarianceMap phi = InvarianceMap::swap(2, 0, 1);
  const PromptDistribution uniform = PromptDistribution::uniform(2);
  Matrix pi0(2, 2);
  pi0 << 0.2, 0.8, 0.7, 0.3;
  const RelaxedResult tight = relaxed_project(
      negative_entropy(), SoftDivergenceSpec::jensen_shannon(), 1e-10, uniform,
      phi, pi0);
  const SolveResult direct = direct_projection(
      negative_entropy(), uniform, phi, ConvexModelSet::simplex_product(2, 2),
      pi0);
  CHECK((tight.table - direct.table).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("relaxed floor: closed forms") {
  CHECK(relaxed_improvement_floor(1.0, 0.25, 0.0, 0.3) ==
        doctest::Approx(0.15));
  // Jensen-Shannon constant: floor = (mu_F/2) [sqrt(D) - sqrt(2 Lambda)]_+^2.
  const double d = 0.09, lam = 0.002;
  const double expect =
      0.5 * std::pow(std::sqrt(d) - std::sqrt(2.0 * lam), 2.0);
  CHECK(relaxed_improvement_floor(1.0, 0.25, lam, d) ==
        doctest::Approx(expect).epsilon(1e-12));
  // Symmetrized KL: [sqrt(D) - sqrt(Lambda)/2]_+^2.
  const double expect_kl =
      0.5 * std::pow(std::sqrt(d) - 0.5 * std::sqrt(lam), 2.0);
  CHECK(relaxed_improvement_floor(1.0, 2.0, lam, d) ==
        doctest::Approx(expect_kl).epsilon(1e-12));
  // Large Lambda clamps at zero.
  CHECK(relaxed_improvement_floor(1.0, 0.25, 10.0, 0.01) == 0.0);
}

TEST_CASE("norm mismatch between generator and soft divergence is rejected") {
  const InvarianceMap phi = InvarianceMap::swap(2, 0, 1);
  Matrix pi0(2, 2);
  pi0 << 0.1, 0.9, 0.8, 0.2;
  CHECK_THROWS_AS(
      relaxed_project(squared_euclidean(), SoftDivergenceSpec::jensen_shannon(),
                      0.01, PromptDistribution::uniform(2), phi, pi0),
      DomainError);
}
