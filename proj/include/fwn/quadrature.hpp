#pragma once

#include <functional>
#include <vector>

namespace fwn {

struct QuadResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

/// Adaptive Gauss-Kronrod (7/15) integration of f over [a,b] to absolute
/// tolerance tol. Bisects the interval with the largest local error estimate.
QuadResult adaptive_gk(const std::function<double(double)>& f, double a, double b,
                       double tol, int max_intervals = 2000);

/// As adaptive_gk but with interior breakpoints (kinks/jumps of f) that seed
/// the initial subdivision.
QuadResult adaptive_gk_split(const std::function<double(double)>& f, double a, double b,
                             const std::vector<double>& breakpoints, double tol,
                             int max_intervals = 2000);

/// Integral of u^{c-1} g(u) du over [0, A] for c in (0,1], g smooth.
/// The substitution u = v^{1/c} removes the endpoint singularity exactly.
QuadResult power_weighted_integral(const std::function<double(double)>& g, double c,
                                   double A, double tol);

}  // namespace fwn
