#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "fwn/hurst.hpp"

using namespace fwn;

namespace {
// arbitrary-precision references for the closed-form constants
constexpr double kC06 = 0.053211978055669296194;
constexpr double kC075 = 0.14927036108294766127;
constexpr double kC09 = 0.27862467805309900154;
constexpr double kK06 = 0.30209704403313417333;
constexpr double kK075 = 1.9652076847778574074;
constexpr double kK09 = 10.629649214818801977;
constexpr double kPref06 = 0.17769865494005744226;
constexpr double kPref075 = 0.31629764994563094977;
constexpr double kPref09 = 0.37426235302816189035;
}  // namespace

TEST_CASE("normalizing constant matches high-precision references") {
  CHECK(hurst_c(0.6) == doctest::Approx(kC06).epsilon(1e-13));
  CHECK(hurst_c(0.75) == doctest::Approx(kC075).epsilon(1e-13));
  CHECK(hurst_c(0.9) == doctest::Approx(kC09).epsilon(1e-13));
  // Gamma pole at H -> 1/2+ drives the constant to zero
  CHECK(hurst_c(0.5001) < hurst_c(0.6));
}

TEST_CASE("bound constant matches references and stays positive") {
  CHECK(hurst_k(0.6) == doctest::Approx(kK06).epsilon(1e-13));
  CHECK(hurst_k(0.75) == doctest::Approx(kK075).epsilon(1e-13));
  CHECK(hurst_k(0.9) == doctest::Approx(kK09).epsilon(1e-13));
  for (double h : {0.51, 0.6, 0.75, 0.9, 0.99}) CHECK(hurst_k(h) > 0.0);
  // the bound is non-vacuous for the unit integrand at t = 1
  CHECK(2.0 * hurst_c(0.75) < hurst_k(0.75));
}

TEST_CASE("domain is the open interval (1/2, 1)") {
  CHECK_THROWS_AS(hurst_c(0.5), std::domain_error);
  CHECK_THROWS_AS(hurst_c(1.0), std::domain_error);
  CHECK_THROWS_AS(hurst_k(0.3), std::domain_error);
  CHECK_THROWS_AS(HurstModel::create(1.2), std::domain_error);
}

TEST_CASE("calibration rejects both printed and derived prefactors") {
  for (double h : {0.6, 0.75, 0.9}) {
    Calibration cal = calibrate_prefactor(h);
    CHECK(cal.rel_err_printed > 0.005);
    CHECK(cal.rel_err_derived > 0.005);
    CHECK(cal.rel_err_fitted < 0.005);
    CHECK(cal.adopted == PrefactorChoice::least_squares);
  }
}

TEST_CASE("fitted prefactor matches the closed form") {
  // independent oracle: p = sqrt(4 H c_h / (a Kq)), Kq = B(a,a) + 2 B(a,1-2a)
  auto closed = [](double h) {
    const double a = h - 0.5;
    auto beta = [](double x, double y) {
      return std::exp(std::lgamma(x) + std::lgamma(y) - std::lgamma(x + y));
    };
    const double kq = beta(a, a) + 2.0 * beta(a, 1.0 - 2.0 * a);
    return std::sqrt(4.0 * h * hurst_c(h) / (a * kq));
  };
  CHECK(calibrate_prefactor(0.6).adopted_value == doctest::Approx(closed(0.6)).epsilon(1e-9));
  CHECK(calibrate_prefactor(0.75).adopted_value == doctest::Approx(closed(0.75)).epsilon(1e-9));
  CHECK(calibrate_prefactor(0.9).adopted_value == doctest::Approx(closed(0.9)).epsilon(1e-9));
  CHECK(calibrate_prefactor(0.75).adopted_value == doctest::Approx(kPref075).epsilon(1e-9));
  CHECK(calibrate_prefactor(0.6).adopted_value == doctest::Approx(kPref06).epsilon(1e-9));
  CHECK(calibrate_prefactor(0.9).adopted_value == doctest::Approx(kPref09).epsilon(1e-9));
}

TEST_CASE("model derived constants are mutually consistent") {
  for (double h : {0.6, 0.75, 0.9}) {
    HurstModel m = HurstModel::create(h);
    CHECK(m.kernel_scale == doctest::Approx(m.m_prefactor * (h - 0.5)));
    // collapsed double kernel equals the fgn density: c_M^2 Kq = 2H(2H-1)c_h
    CHECK(m.msq_kernel_scale == doctest::Approx(m.fgn_density).epsilon(1e-8));
  }
}
