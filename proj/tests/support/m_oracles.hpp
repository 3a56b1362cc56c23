#pragma once

// Test-side oracles for the operator identities. These stay independent of
// the spectral implementation path: everything goes through the kernel
// quadratures, with the slow |x|^{2H-3}-type far fields of M-images handled
// by the 1/x transform so whole-line integrals reach quadrature accuracy.

#include <algorithm>
#include <cmath>
#include <functional>

#include "fwn/operator_m.hpp"
#include "fwn/quadrature.hpp"

namespace fwn::test_support {

/// M f at a point for f supported (essentially) on [lo, hi]; the kernel
/// window is widened to cover the support and panels are seeded on it so
/// adaptive refinement cannot miss a distant bump.
inline double m_point(const HurstModel& model, const std::function<double(double)>& f,
                      double x, double lo, double hi, double tol = 1e-8) {
  MQuadratureOptions opts;
  opts.truncation_radius = std::max(std::abs(lo - x), std::abs(hi - x)) + 5.0;
  opts.breakpoints = {lo, 0.5 * (lo + hi), hi};
  opts.tol = tol;
  return apply_m_quadrature(model, f, x, opts);
}

inline double m2_point(const HurstModel& model, const std::function<double(double)>& f,
                       double x, double lo, double hi, double tol = 1e-8) {
  MQuadratureOptions opts;
  opts.truncation_radius = std::max(std::abs(lo - x), std::abs(hi - x)) + 5.0;
  opts.breakpoints = {lo, 0.5 * (lo + hi), hi};
  opts.tol = tol;
  return apply_m_squared_quadrature(model, f, x, opts);
}

/// \int_R g(x) dx for g with |x|^{2H-3}-type far field (products of two
/// M-images): central window plus both tails mapped through x -> 1/u.
inline double whole_line_integral(const HurstModel& model,
                                  const std::function<double(double)>& g, double X,
                                  double tol) {
  const double a = model.alpha();
  double total = adaptive_gk(g, -X, X, tol, 2000).value;
  for (double sign : {1.0, -1.0}) {
    total += power_weighted_integral(
                 [&](double u) { return std::pow(u, 2.0 * a - 2.0) * g(sign / u); },
                 1.0 - 2.0 * a, 1.0 / X, tol)
                 .value;
  }
  return total;
}

/// Literal iterated double-kernel form of M^2: the outer singular kernel
/// integrated against inner M-images, including the slowly decaying outer
/// tail. Independent of the collapsed |w|^{2H-2} route.
inline double m2_double_kernel(const HurstModel& model,
                               const std::function<double(double)>& f, double x, double lo,
                               double hi, double tol = 1e-7) {
  const double a = model.alpha();
  auto m_inner = [&](double z) { return m_point(model, f, x + z, lo, hi, 0.02 * tol); };
  const double R = std::max(std::abs(lo - x), std::abs(hi - x)) + 10.0;
  double total = 0.0;
  for (double sign : {1.0, -1.0}) {
    // near field |z| <= R with the kernel weight handled by substitution
    total +=
        power_weighted_integral([&](double z) { return m_inner(sign * z); }, a, R, 0.25 * tol)
            .value;
    // far field |z| > R: z -> 1/u keeps the integrand smooth down to u = 0
    total += power_weighted_integral(
                 [&](double u) { return std::pow(u, a - 1.0) * m_inner(sign / u); },
                 1.0 - 2.0 * a, 1.0 / R, 0.25 * tol)
                 .value;
  }
  return model.kernel_scale * total;
}

}  // namespace fwn::test_support
