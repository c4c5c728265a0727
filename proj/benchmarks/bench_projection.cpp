#include <benchmark/benchmark.h>

#include "coherence/projection.hpp"
#include "coherence/rng.hpp"

namespace {

using namespace coherence;

Matrix random_stochastic(SplitMix64& rng, Eigen::Index n, Eigen::Index d) {
  Matrix m(n, d);
  for (Eigen::Index x = 0; x < n; ++x) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      m(x, j) = 0.05 + rng.uniform();
      s += m(x, j);
    }
    m.row(x) /= s;
  }
  return m;
}

void BM_ExpectedDivergence(benchmark::State& state) {
  SplitMix64 rng(1);
  const Eigen::Index n = state.range(0), d = 8;
  const PromptDistribution dist = PromptDistribution::uniform(n);
  const Matrix a = random_stochastic(rng, n, d);
  const Matrix b = random_stochastic(rng, n, d);
  const GeneratorSpec gen = negative_entropy();
  for (auto _ : state)
    benchmark::DoNotOptimize(expected_divergence(gen, dist, a, b));
}
BENCHMARK(BM_ExpectedDivergence)->Arg(8)->Arg(64)->Arg(512);

void BM_OrbitAverage(benchmark::State& state) {
  SplitMix64 rng(2);
  const Eigen::Index n = state.range(0), d = 8;
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    perm[static_cast<std::size_t>(i)] = i % 2 == 0 ? i + 1 : i - 1;
  const InvarianceMap phi(perm);
  const PromptDistribution dist = PromptDistribution::uniform(n);
  const Matrix pi0 = random_stochastic(rng, n, d);
  const GeneratorSpec gen = negative_entropy();
  for (auto _ : state)
    benchmark::DoNotOptimize(orbit_average(gen, dist, phi, pi0));
}
BENCHMARK(BM_OrbitAverage)->Arg(8)->Arg(64)->Arg(512);

void BM_DirectProjectionCapped(benchmark::State& state) {
  SplitMix64 rng(3);
  const Eigen::Index n = state.range(0), d = 5;
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    perm[static_cast<std::size_t>(i)] = i % 2 == 0 ? i + 1 : i - 1;
  const InvarianceMap phi(perm);
  const PromptDistribution dist = PromptDistribution::uniform(n);
  const Matrix pi0 = random_stochastic(rng, n, d);
  ConvexModelSet set = ConvexModelSet::simplex_product(n, d);
  set.with_cap(0, 0, 0.4);
  const GeneratorSpec gen = negative_entropy();
  for (auto _ : state)
    benchmark::DoNotOptimize(direct_projection(gen, dist, phi, set, pi0));
}
BENCHMARK(BM_DirectProjectionCapped)->Arg(8)->Arg(32)->Arg(128);

void BM_AffineCoupledSolve(benchmark::State& state) {
  SplitMix64 rng(4);
  const Eigen::Index n = 6, d = 4;
  const PromptDistribution dist = PromptDistribution::uniform(n);
  const Matrix pi0 = random_stochastic(rng, n, d);
  const Matrix star = random_stochastic(rng, n, d);
  ConvexModelSet set = ConvexModelSet::simplex_product(n, d);
  Matrix coeffs(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      coeffs(i, j) = 2.0 * rng.uniform() - 1.0;
  set.with_affine(coeffs, (coeffs.array() * star.array()).sum());
  const GeneratorSpec gen = negative_entropy();
  for (auto _ : state)
    benchmark::DoNotOptimize(bregman_project(gen, dist, set, pi0));
}
BENCHMARK(BM_AffineCoupledSolve);

}  // namespace

BENCHMARK_MAIN();
