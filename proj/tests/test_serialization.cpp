#include <doctest.h>

#include "coherence/rng.hpp"
#include "coherence/serialization.hpp"

using namespace coherence;

TEST_CASE("CSV round trip at 17 significant digits") {
  SplitMix64 rng(3);
  Matrix m(3, 4);
  for (int x = 0; x < 3; ++x)
    for (int j = 0; j < 4; ++j) m(x, j) = rng.uniform();
  m(0, 0) = 1.0 / 3.0;
  m(1, 1) = 1e-17;
  m(2, 2) = 0.1 + 0.2;

  const std::string csv = table_to_csv(m);
  CHECK(csv.rfind("y0,y1,y2,y3\r\n", 0) == 0);
  const Matrix back = table_from_csv(csv);
  REQUIRE(back.rows() == 3);
  REQUIRE(back.cols() == 4);
  CHECK((back - m).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("JSON round trip") {
  Matrix m(2, 2);
  m << 0.1, 0.9, 2.0 / 3.0, 1.0 / 3.0;
  const Matrix back = table_from_json(table_to_json(m));
  CHECK((back - m).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(table_from_json("{\"rows\": []}"), DomainError);
}

TEST_CASE("format_g17 round trips doubles") {
  SplitMix64 rng(9);
  for (int i = 0; i < 1000; ++i) {
    const double v = (rng.uniform() - 0.5) * std::pow(10.0, i % 20 - 10);
    CHECK(std::stod(format_g17(v)) == v);
  }
}
