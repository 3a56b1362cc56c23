#include "fwn/hurst.hpp"

#include <cmath>
#include <stdexcept>

#include "fwn/quadrature.hpp"

namespace fwn {

namespace {

void check_domain(double H) {
  if (!(H > 0.5 && H < 1.0))
    throw std::domain_error("Hurst parameter must lie in (1/2, 1), got " + std::to_string(H));
}

double sgn_pow(double x, double a) {
  if (x == 0.0) return 0.0;
  return x > 0.0 ? std::pow(x, a) : -std::pow(-x, a);
}

// \int_R (sgn(t-x)|t-x|^a + sgn(x)|x|^a)^2 dx, the prefactor-free energy of
// the indicator image. Central part by adaptive quadrature with splits at the
// kinks; each tail mapped to a power-weighted integral on (0, 1/X] by
// x -> 1/u, which handles the slow |x|^{2a-2} decay exactly.
double indicator_energy(double t, double a, double tol) {
  auto g2 = [&](double x) {
    const double g = sgn_pow(t - x, a) + sgn_pow(x, a);
    return g * g;
  };
  const double X = 20.0 * t;
  QuadResult centre = adaptive_gk_split(g2, -X, X + t, {0.0, t}, tol, 4000);
  // tails under x -> 1/u; the huge-argument cancellation x^a - (x-t)^a is
  // rewritten through expm1/log1p so doubles keep full precision
  auto tail_term = [&](double sign) {
    auto integrand = [&, sign](double u) {
      const double d = sign > 0 ? -std::expm1(a * std::log1p(-t * u))
                                : std::expm1(a * std::log1p(t * u));
      return (d / u) * (d / u);
    };
    return power_weighted_integral(integrand, 1.0 - 2.0 * a,
                                   sign > 0 ? 1.0 / (X + t) : 1.0 / X, tol);
  };
  return centre.value + tail_term(1.0).value + tail_term(-1.0).value;
}

// \int |u|^{a-1} |1-u|^{a-1} du via three power-weighted pieces.
double kernel_self_convolution(double a, double tol) {
  // [0,1]: symmetric around 1/2
  QuadResult inner = power_weighted_integral(
      [&](double u) { return std::pow(1.0 - u, a - 1.0); }, a, 0.5, tol);
  // (-inf,0] and [1,inf) are equal: \int_0^inf v^{a-1}(1+v)^{a-1} dv,
  // split at v=1 and map the far piece back to [0,1] with v -> 1/w.
  QuadResult near = power_weighted_integral(
      [&](double v) { return std::pow(1.0 + v, a - 1.0); }, a, 1.0, tol);
  QuadResult far = power_weighted_integral(
      [&](double w) { return std::pow(1.0 + w, a - 1.0); }, 1.0 - 2.0 * a, 1.0, tol);
  return 2.0 * inner.value + 2.0 * (near.value + far.value);
}

}  // namespace

double hurst_c(double H) {
  check_domain(H);
  const double a = H - 0.5;
  return 1.0 / (2.0 * std::tgamma(a) * std::cos(M_PI_2 * a));
}

double hurst_k(double H) {
  check_domain(H);
  const double c = hurst_c(H);
  return 4.0 * c * c * (M_PI * std::pow(5.0, 2.0 * H - 1.0) / (2.0 * H - 1.0) + 2.0 / (1.0 - H));
}

std::string Calibration::adopted_name() const {
  switch (adopted) {
    case PrefactorChoice::printed: return "printed";
    case PrefactorChoice::derived: return "derived";
    default: return "least_squares";
  }
}

Calibration calibrate_prefactor(double H) {
  check_domain(H);
  const double a = H - 0.5;
  const double ch = hurst_c(H);
  const double ts[3] = {0.5, 1.0, 2.0};
  constexpr double kGate = 0.005;  // 0.5% acceptance of the variance identity

  double energy[3];
  for (int i = 0; i < 3; ++i) energy[i] = indicator_energy(ts[i], a, 1e-12);

  Calibration cal;
  cal.candidate_printed = 1.0 / ch;
  cal.candidate_derived = ch / a;

  auto worst_rel = [&](double p) {
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double target = 2.0 * ch * std::pow(ts[i], 2.0 * H);
      worst = std::max(worst, std::abs(p * p * energy[i] / target - 1.0));
    }
    return worst;
  };
  cal.rel_err_printed = worst_rel(cal.candidate_printed);
  cal.rel_err_derived = worst_rel(cal.candidate_derived);

  // one-parameter least squares in p^2: minimize sum (p^2 E_t - target_t)^2
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double target = 2.0 * ch * std::pow(ts[i], 2.0 * H);
    num += energy[i] * target;
    den += energy[i] * energy[i];
  }
  cal.fitted = std::sqrt(num / den);
  cal.rel_err_fitted = worst_rel(cal.fitted);

  if (cal.rel_err_printed <= kGate) {
    cal.adopted = PrefactorChoice::printed;
    cal.adopted_value = cal.candidate_printed;
  } else if (cal.rel_err_derived <= kGate) {
    cal.adopted = PrefactorChoice::derived;
    cal.adopted_value = cal.candidate_derived;
  } else {
    cal.adopted = PrefactorChoice::least_squares;
    cal.adopted_value = cal.fitted;
  }
  return cal;
}

HurstModel HurstModel::create(double H) {
  check_domain(H);
  HurstModel m;
  m.h = H;
  m.c_h = hurst_c(H);
  m.k_h = hurst_k(H);
  m.m_prefactor = calibrate_prefactor(H).adopted_value;
  m.kernel_scale = m.m_prefactor * (H - 0.5);
  m.msq_kernel_scale =
      m.kernel_scale * m.kernel_scale * kernel_self_convolution(H - 0.5, 1e-11);
  m.fgn_density = 2.0 * H * (2.0 * H - 1.0) * m.c_h;
  return m;
}

}  // namespace fwn
