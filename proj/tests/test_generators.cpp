#include <doctest.h>

#include <cmath>

#include "coherence/generators.hpp"
#include "coherence/rng.hpp"

using namespace coherence;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Vector random_interior(SplitMix64& rng, Eigen::Index d) {
  Vector v(d);
  double s = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    v[i] = 0.05 + rng.uniform();
    s += v[i];
  }
  return v / s;
}

}  // namespace

TEST_CASE("value: golden points") {
  CHECK(value(negative_entropy(), vec({1.0, 0.0, 0.0})) == doctest::Approx(0.0));
  CHECK(value(squared_euclidean(), vec({0.3, 0.7})) == doctest::Approx(0.29));

  Matrix a(3, 3);
  a << 1, 0, 1, 0, 1, 0, 1, 0, 1;
  const GeneratorSpec coupled = quadratic_coupled(a, Vector::Zero(3));
  CHECK(value(coupled, vec({0.65, 0.65, 0.0})) == doctest::Approx(0.4225));
}

TEST_CASE("value: domain errors") {
  CHECK_THROWS_AS(value(negative_entropy(), vec({-0.1, 1.1})), DomainError);
  CHECK_THROWS_AS(value(negative_log(), vec({0.0, 1.0})), DomainError);
}

TEST_CASE("gradient: golden points") {
  const Vector g = gradient(squared_euclidean(), vec({0.1, 0.8}));
  CHECK(g[0] == doctest::Approx(0.1));
  CHECK(g[1] == doctest::Approx(0.8));

  const Vector ge = gradient(negative_entropy(), vec({0.5, 0.5}));
  CHECK(ge[0] == doctest::Approx(1.0 + std::log(0.5)));

  const Vector gl = gradient(negative_log(), vec({0.1, 0.8}));
  CHECK(gl[0] == doctest::Approx(-10.0));
  CHECK(gl[1] == doctest::Approx(-1.25));

  CHECK_THROWS_AS(gradient(negative_entropy(), vec({0.0, 1.0})), DomainError);
}

TEST_CASE("dual map inverse: golden points and range errors") {
  const Vector u = vec({0.45, 0.55});
  CHECK((dual_map_inverse(squared_euclidean(), u) - u).norm() == 0.0);

  const Vector p = dual_map_inverse(negative_log(), vec({-5.625}));
  CHECK(p[0] == doctest::Approx(8.0 / 45.0).epsilon(1e-12));

  CHECK_THROWS_AS(dual_map_inverse(negative_log(), vec({0.5})), DomainError);

  Matrix psd(2, 2);
  psd << 1, 1, 1, 1;
  const GeneratorSpec singular = quadratic_coupled(psd, Vector::Zero(2));
  CHECK_FALSE(singular.legendre);
  CHECK_THROWS_AS(dual_map_inverse(singular, vec({1.0, 0.0})), SingularMatrix);
}

TEST_CASE("conjugate: golden points") {
  SplitMix64 rng(11);
  const Vector p = random_interior(rng, 4);
  // F*(grad F(p)) = sum p_k for the negative entropy.
  CHECK(conjugate_value(negative_entropy(), gradient(negative_entropy(), p)) ==
        doctest::Approx(p.sum()).epsilon(1e-12));
  CHECK(conjugate_value(squared_euclidean(), vec({0.0, 0.0})) == 0.0);
  CHECK(conjugate_value(negative_entropy(), vec({1.0, 1.0})) ==
        doctest::Approx(2.0));
}

TEST_CASE("properties: gradient check, bijection, Fenchel-Young, convexity") {
  SplitMix64 seeder(2024);
  std::vector<GeneratorSpec> gens = {squared_euclidean(), negative_entropy(),
                                     negative_log()};
  {
    SplitMix64 r = seeder.split();
    Matrix b(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) b(i, j) = 2.0 * r.uniform() - 1.0;
    gens.push_back(mahalanobis(b.transpose() * b + Matrix::Identity(3, 3)));
    gens.push_back(diagonal_quadratic(vec({0.5, 2.0, 3.0})));
  }
  for (const auto& gen : gens) {
    const Eigen::Index d = gen.matrix ? gen.matrix->rows() : 3;
    SplitMix64 rng(seeder.next_u64());
    for (int it = 0; it < 100; ++it) {
      const Vector p = random_interior(rng, d);
      const Vector q = random_interior(rng, d);
      const Vector g = gradient(gen, p);

      Vector fd(d);
      for (Eigen::Index j = 0; j < d; ++j) {
        Vector hi = p, lo = p;
        hi[j] += 1e-6;
        lo[j] -= 1e-6;
        fd[j] = (value(gen, hi) - value(gen, lo)) / 2e-6;
      }
      CHECK((fd - g).cwiseAbs().maxCoeff() / (1.0 + g.cwiseAbs().maxCoeff()) <=
            1e-5);

      CHECK((dual_map_inverse(gen, g) - p).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK(std::abs(value(gen, p) + conjugate_value(gen, g) - p.dot(g)) <=
            1e-10);

      const double t = rng.uniform();
      CHECK(value(gen, t * p + (1 - t) * q) <=
            t * value(gen, p) + (1 - t) * value(gen, q) + 1e-12);
    }
  }
}

TEST_CASE("declared constants") {
  CHECK(negative_entropy().mu == 1.0);
  CHECK(negative_entropy().norm_tag == NormTag::L1);
  CHECK(squared_euclidean().mu == 1.0);
  CHECK(squared_euclidean().norm_tag == NormTag::L2);
  CHECK_THROWS_AS(negative_log().require_mu(), MissingConstant);

  Matrix a(2, 2);
  a << 2, 0, 0, 5;
  const GeneratorSpec m = mahalanobis(a);
  CHECK(m.require_mu() == doctest::Approx(2.0));
  CHECK(m.require_smoothness() == doctest::Approx(5.0));
}
