#include <doctest.h>

#include <ptrans/rng.hpp>

using namespace ptrans;

TEST_CASE("derive_seed is deterministic and label-sensitive") {
  CHECK(derive_seed(1u, 2, 3) == derive_seed(1u, 2, 3));
  CHECK(derive_seed(1u, 2, 3) != derive_seed(1u, 3, 2));
  CHECK(derive_seed(1u, 2, 3) != derive_seed(2u, 2, 3));
  CHECK(derive_seed(7u) != derive_seed(7u, 0));
}

TEST_CASE("streams from different derived seeds decorrelate") {
  Rng a = make_rng(derive_seed(42u, 0));
  Rng b = make_rng(derive_seed(42u, 1));
  int same = 0;
  for (int i = 0; i < 64; ++i) {
    if (a() == b()) ++same;
  }
  CHECK(same == 0);
}

TEST_CASE("uniform01 stays in [0,1) with the right mean") {
  Rng rng = make_rng(5);
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = uniform01(rng);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("uniform maps onto the requested interval") {
  Rng rng = make_rng(11);
  for (int i = 0; i < 1000; ++i) {
    const double u = uniform(rng, -1.0, 1.0);
    REQUIRE(u >= -1.0);
    REQUIRE(u < 1.0);
  }
}
