#pragma once

#include <functional>
#include <vector>

#include "fwn/grid.hpp"
#include "fwn/hurst.hpp"

namespace fwn {

/// Closed form of M applied to the indicator of [0, t]:
///   m_prefactor * (sgn(t-x)|t-x|^{H-1/2} + sgn(x)|x|^{H-1/2}),
/// continuously extended by 0 at each vanishing argument.
double m_indicator(const HurstModel& model, double t, double x);

/// Exact antiderivative \int_0^u m_indicator(t, s) ds.
double m_indicator_window_integral(const HurstModel& model, double t, double u);

struct MQuadratureOptions {
  double truncation_radius = 0.0;   // 0 -> 20 * natural scale of the call
  double tol = 1e-8;
  int max_intervals = 4000;
  std::vector<double> breakpoints;  // kinks/jumps of f, absolute coordinates
};

/// Kernel form of M at a point: kernel_scale * \int f(x+y)|y|^{H-3/2} dy over
/// [-R, R]. The singular core [-eps, eps] integrates the weight exactly
/// against a local linear interpolant of f and is refined until stable; the
/// rest is adaptive Gauss-Kronrod. Throws AccuracyError when the combined
/// error estimate misses tol.
double apply_m_quadrature(const HurstModel& model, const std::function<double(double)>& f,
                          double x, const MQuadratureOptions& opts = {});

/// M(M f) at a point through the reduced one-dimensional kernel
/// msq_kernel_scale * \int f(x+w)|w|^{2H-2} dw (the double kernel collapsed
/// by convolving the singular weights).
double apply_m_squared_quadrature(const HurstModel& model,
                                  const std::function<double(double)>& f, double x,
                                  const MQuadratureOptions& opts = {});

/// Spectral form of M on a uniform grid: multiplier scale * |xi|^{1/2-H} with
/// the zero-frequency multiplier set to 0. Grid length must be a power of two.
GridFunction apply_m_fft(const HurstModel& model, const GridFunction& f);

/// M(M f) on the grid, composed from two spectral applications.
GridFunction apply_m_squared(const HurstModel& model, const GridFunction& f);

/// (f, g)_H = \int Mf * Mg dx by the trapezoid rule on the common grid.
double inner_product_h(const HurstModel& model, const GridFunction& f, const GridFunction& g);

/// (f.1_[t0,t1], g.1_[t0,t1])_H for time-window integrands, evaluated as
/// fgn_density * iint f(s) g(u) |s-u|^{2H-2} ds du by nested singular
/// quadrature. Exact route for the second-moment identities.
double window_inner_product(const HurstModel& model, const std::function<double(double)>& f,
                            const std::function<double(double)>& g, double t0, double t1,
                            double tol = 1e-9);

}  // namespace fwn
