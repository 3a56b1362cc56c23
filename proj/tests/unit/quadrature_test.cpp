#include <cmath>

#include "doctest.h"
#include "fwn/quadrature.hpp"

using namespace fwn;

TEST_CASE("adaptive GK reproduces smooth integrals") {
  QuadResult r = adaptive_gk([](double x) { return std::sin(x); }, 0.0, M_PI, 1e-12);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-12));

  r = adaptive_gk([](double x) { return std::exp(-x * x); }, -8.0, 8.0, 1e-12);
  CHECK(r.value == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-12));
}

TEST_CASE("breakpoints handle kinks") {
  // |x - 1/3| on [0,1] = 1/2 - 1/3 + 1/9 = 5/18
  auto f = [](double x) { return std::abs(x - 1.0 / 3.0); };
  QuadResult r = adaptive_gk_split(f, 0.0, 1.0, {1.0 / 3.0}, 1e-13);
  CHECK(r.value == doctest::Approx(5.0 / 18.0).epsilon(1e-12));
}

TEST_CASE("power-weighted integral removes the endpoint singularity") {
  // \int_0^1 u^{c-1} du = 1/c
  for (double c : {0.1, 0.25, 0.5, 0.9}) {
    QuadResult r = power_weighted_integral([](double) { return 1.0; }, c, 1.0, 1e-12);
    CHECK(r.value == doctest::Approx(1.0 / c).epsilon(1e-11));
  }
  // \int_0^2 u^{-1/2} cos(u) du, reference from a high-precision evaluation
  QuadResult r = power_weighted_integral([](double u) { return std::cos(u); }, 0.5, 2.0, 1e-12);
  CHECK(r.value == doctest::Approx(1.8882490336925437).epsilon(1e-10));
}
