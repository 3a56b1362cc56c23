#include <cmath>
#include <sstream>

#include "doctest.h"
#include "fwn/errors.hpp"
#include "fwn/grid.hpp"

using namespace fwn;

TEST_CASE("time grid validates its shape") {
  TimeGrid g = TimeGrid::uniform(2.0, 257);
  CHECK(g.dt() == doctest::Approx(2.0 / 256));
  CHECK(g.t(0) == 0.0);
  CHECK(g.t(256) == doctest::Approx(2.0));
  CHECK_THROWS_AS(TimeGrid::uniform(1.0, 100), ConfigError);
  CHECK_THROWS_AS(TimeGrid::uniform(-1.0, 257), ConfigError);
}

TEST_CASE("grid function interpolation and integral") {
  GridFunction f = GridFunction::symmetric(2.0, 8);
  f.fill([](double x) { return x; });
  CHECK(f.x(0) == doctest::Approx(-2.0));
  CHECK(f.interpolate(-2.0) == doctest::Approx(-2.0));
  CHECK(f.interpolate(0.25) == doctest::Approx(0.25));
  CHECK(f.interpolate(10.0) == 0.0);

  GridFunction g = GridFunction::symmetric(1.0, 1024);
  g.fill([](double x) { return x * x; });
  // grid covers [-1, 1): integral of x^2 minus the missing last cell
  CHECK(g.trapezoid() == doctest::Approx(2.0 / 3.0).epsilon(1e-2));
}

TEST_CASE("grid function csv round trip") {
  GridFunction f = GridFunction::symmetric(1.0, 16);
  f.fill([](double x) { return std::sin(3.0 * x); });
  std::stringstream ss;
  ss.precision(17);
  f.write_csv(ss);
  GridFunction g = GridFunction::read_csv(ss);
  REQUIRE(g.size() == f.size());
  CHECK(g.x0 == doctest::Approx(f.x0));
  CHECK(g.dx == doctest::Approx(f.dx));
  for (int i = 0; i < f.size(); ++i) CHECK(g.values[i] == doctest::Approx(f.values[i]));
}
