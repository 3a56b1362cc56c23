#include "fwn/operator_m.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "fwn/errors.hpp"
#include "fwn/fft.hpp"
#include "fwn/quadrature.hpp"

namespace fwn {

namespace {

double sgn_pow(double x, double a) {
  if (x == 0.0) return 0.0;
  return x > 0.0 ? std::pow(x, a) : -std::pow(-x, a);
}

// Weighted point evaluation around the kernel singularity: integrates
// w(y) = |y|^{c-1} against the linear interpolant of f through
// (x-eps, x, x+eps) over [-eps, eps].
double singular_core(const std::function<double(double)>& f, double x, double eps, double c) {
  const double f0 = f(x);
  const double fp = f(x + eps);
  const double fm = f(x - eps);
  const double w0 = std::pow(eps, c) / c;            // \int_0^eps y^{c-1}
  const double w1 = std::pow(eps, c) / (c + 1.0);    // \int_0^eps (y/eps) y^{c-1}
  return 2.0 * f0 * w0 + (fp + fm - 2.0 * f0) * w1;
}

// Core + adaptive flanks for \int_{-R}^{R} f(x+y)|y|^{c-1} dy with the
// epsilon core refined until its contribution stabilizes.
struct KernelIntegral {
  double value;
  double error;
};

KernelIntegral kernel_point_integral(const std::function<double(double)>& f, double x,
                                     double R, double c, const MQuadratureOptions& opts) {
  auto integrand = [&](double y) { return f(x + y) * std::pow(std::abs(y), c - 1.0); };

  // estimate of the piece on [-eps0, eps0]: interpolant core shrinks while
  // the uncovered strips accumulate, until the combined value stabilizes
  const double eps0 = std::min(1.0, R) * 1e-2;
  double eps = eps0;
  double strips = 0.0;
  double region = singular_core(f, x, eps0, c);
  double core_err = std::abs(region);
  for (int pass = 0; pass < 24 && core_err >= 0.05 * opts.tol; ++pass) {
    const double eps_next = eps * 0.25;
    strips += adaptive_gk(integrand, eps_next, eps, 0.02 * opts.tol, 200).value;
    strips += adaptive_gk(integrand, -eps, -eps_next, 0.02 * opts.tol, 200).value;
    const double refined = singular_core(f, x, eps_next, c) + strips;
    core_err = std::abs(refined - region);
    region = refined;
    eps = eps_next;
  }

  std::vector<double> breaks;
  for (double b : opts.breakpoints) breaks.push_back(b - x);
  QuadResult right =
      adaptive_gk_split(integrand, eps0, R, breaks, 0.45 * opts.tol, opts.max_intervals);
  QuadResult left =
      adaptive_gk_split(integrand, -R, -eps0, breaks, 0.45 * opts.tol, opts.max_intervals);
  return {region + right.value + left.value,
          core_err + right.error_estimate + left.error_estimate};
}

// Certifiable truncation tail: probes |f| beyond the radius and charges it
// against the kernel mass out to where the probe reaches.
double tail_probe(const std::function<double(double)>& f, double x, double R, double c) {
  double sup = 0.0;
  for (int i = 1; i <= 8; ++i) {
    const double y = R * (1.0 + 0.25 * i);
    sup = std::max(sup, std::max(std::abs(f(x + y)), std::abs(f(x - y))));
  }
  const double mass = (std::pow(3.0 * R, c) - std::pow(R, c)) / c;
  return 2.0 * sup * mass;
}

enum class SymbolCell { average, rms };

// Per-bin quantization of the multiplier |xi|^{1/2-H}. The symbol is
// integrable but singular at xi = 0, so the DC bin carries its exact cell
// integral rather than the (infinite) point value: the cell average is the
// consistent quadrature for pointwise transforms, the cell root-mean-square
// for energies. power = 2 squares the per-bin value, so one squared pass
// reproduces two single passes bit-for-bit up to rounding.
double symbol_cell(const HurstModel& model, double xi, double cell, int power,
                   SymbolCell kind) {
  const double kappa = model.kernel_scale / model.c_h;
  const double e = 0.5 - model.h;
  const double lo = std::abs(xi) - 0.5 * cell;
  const double hi = std::abs(xi) + 0.5 * cell;
  auto cell_mean = [&](double expo) {
    const double p1 = expo + 1.0;
    if (lo <= 0.0) return 2.0 * std::pow(hi, p1) / (p1 * cell);  // DC bin
    return (std::pow(hi, p1) - std::pow(lo, p1)) / (p1 * cell);
  };
  const double w =
      kind == SymbolCell::average ? kappa * cell_mean(e) : kappa * std::sqrt(cell_mean(2.0 * e));
  return power == 2 ? w * w : w;
}

GridFunction spectral_filter(const HurstModel& model, const GridFunction& f, int power,
                             SymbolCell kind) {
  f.validate();
  const std::size_t n = f.values.size();
  if (!is_power_of_two(n))
    throw ConfigError("spectral operator needs a power-of-two grid, got " + std::to_string(n));

  std::vector<std::complex<double>> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = f.values[i];
  fft_inplace(buf, false);

  const double base_freq = 2.0 * M_PI / (f.dx * static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t folded = std::min(k, n - k);
    const double xi = base_freq * static_cast<double>(folded);
    buf[k] *= symbol_cell(model, xi, base_freq, power, kind);
  }
  fft_inplace(buf, true);

  GridFunction out = f;
  for (std::size_t i = 0; i < n; ++i) out.values[i] = buf[i].real();
  return out;
}

}  // namespace

double m_indicator(const HurstModel& model, double t, double x) {
  if (!std::isfinite(t) || !std::isfinite(x))
    throw ConfigError("m_indicator: non-finite arguments");
  const double a = model.alpha();
  return model.m_prefactor * (sgn_pow(t - x, a) + sgn_pow(x, a));
}

double m_indicator_window_integral(const HurstModel& model, double t, double u) {
  const double a1 = model.alpha() + 1.0;
  // antiderivative of sgn(t-s)|t-s|^a is -|t-s|^{a1}/a1 (continuous at s=t)
  const double part1 = (std::pow(std::abs(t), a1) - std::pow(std::abs(t - u), a1)) / a1;
  const double part2 = sgn_pow(u, a1) / a1;
  return model.m_prefactor * (part1 + part2);
}

double apply_m_quadrature(const HurstModel& model, const std::function<double(double)>& f,
                          double x, const MQuadratureOptions& opts) {
  const double R = opts.truncation_radius > 0.0 ? opts.truncation_radius : 20.0;
  const double c = model.alpha();  // kernel |y|^{c-1} with c = H-1/2
  KernelIntegral ki = kernel_point_integral(f, x, R, c, opts);
  const double tail = model.kernel_scale * tail_probe(f, x, R, c);
  if (ki.error > opts.tol)
    throw AccuracyError("apply_m_quadrature: refinement stalled above tolerance",
                        model.kernel_scale * ki.error + tail, tail);
  return model.kernel_scale * ki.value;
}

double apply_m_squared_quadrature(const HurstModel& model,
                                  const std::function<double(double)>& f, double x,
                                  const MQuadratureOptions& opts) {
  const double R = opts.truncation_radius > 0.0 ? opts.truncation_radius : 20.0;
  const double c = 2.0 * model.h - 1.0;  // collapsed double kernel |w|^{c-1}
  KernelIntegral ki = kernel_point_integral(f, x, R, c, opts);
  const double tail = model.msq_kernel_scale * tail_probe(f, x, R, c);
  if (ki.error > opts.tol)
    throw AccuracyError("apply_m_squared_quadrature: refinement stalled above tolerance",
                        model.msq_kernel_scale * ki.error + tail, tail);
  return model.msq_kernel_scale * ki.value;
}

GridFunction apply_m_fft(const HurstModel& model, const GridFunction& f) {
  return spectral_filter(model, f, 1, SymbolCell::average);
}

GridFunction apply_m_squared(const HurstModel& model, const GridFunction& f) {
  // single pass with the squared symbol; agrees with two apply_m_fft passes
  // to rounding
  return spectral_filter(model, f, 2, SymbolCell::average);
}

double inner_product_h(const HurstModel& model, const GridFunction& f, const GridFunction& g) {
  if (f.size() != g.size() || f.x0 != g.x0 || f.dx != g.dx)
    throw ConfigError("inner_product_h: grids must match");
  // energy-exact quantization: the trapezoid of Mf*Mg equals the Parseval
  // sum, which wants the cell mean of the squared symbol
  GridFunction mf = spectral_filter(model, f, 1, SymbolCell::rms);
  GridFunction mg = spectral_filter(model, g, 1, SymbolCell::rms);
  GridFunction prod = mf;
  for (int i = 0; i < prod.size(); ++i) prod.values[i] = mf.values[i] * mg.values[i];
  return prod.trapezoid();
}

double window_inner_product(const HurstModel& model, const std::function<double(double)>& f,
                            const std::function<double(double)>& g, double t0, double t1,
                            double tol) {
  if (!(t1 > t0)) return 0.0;
  const double c = 2.0 * model.h - 1.0;
  // iint over the square = \int_s [ f(s) \int_{v>0} g(s-v) v^{c-1} dv
  //                               + g(s) \int_{v>0} f(s-v) v^{c-1} dv ]  (u < s half, symmetrized)
  auto outer = [&](double s) {
    const double span = s - t0;
    if (span <= 0.0) return 0.0;
    const double inner_fg =
        power_weighted_integral([&](double v) { return g(s - v); }, c, span, 0.25 * tol).value;
    const double inner_gf =
        power_weighted_integral([&](double v) { return f(s - v); }, c, span, 0.25 * tol).value;
    return f(s) * inner_fg + g(s) * inner_gf;
  };
  QuadResult r = adaptive_gk(outer, t0, t1, tol, 800);
  return model.fgn_density * r.value;
}

}  // namespace fwn
