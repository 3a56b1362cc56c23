#include "fwn/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace fwn {
namespace {

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule
// (abscissae for the positive half of [-1,1]).
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, err;
  bool operator<(const Panel& o) const { return err < o.err; }
};

Panel gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kron = kWgk[7] * fc;
  double gauss = kWg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double x = h * kXgk[j];
    const double fsum = f(c - x) + f(c + x);
    kron += kWgk[j] * fsum;
    if (j % 2 == 1) gauss += kWg[j / 2] * fsum;
  }
  kron *= h;
  gauss *= h;
  // conservative |K15 - G7| estimate with a machine-noise floor
  const double err = std::max(std::abs(kron - gauss), 1e-16 * std::abs(kron));
  return {a, b, kron, err};
}

QuadResult adapt(const std::function<double(double)>& f, std::vector<Panel> initial,
                 double tol, int max_intervals) {
  std::priority_queue<Panel> heap;
  double total = 0.0, total_err = 0.0;
  for (auto& p : initial) {
    total += p.value;
    total_err += p.err;
    heap.push(p);
  }
  int n = static_cast<int>(initial.size());
  while (total_err > tol && n < max_intervals) {
    Panel worst = heap.top();
    heap.pop();
    if (worst.b - worst.a < 1e-15 * (std::abs(worst.a) + 1.0)) {
      heap.push(worst);  // interval exhausted at double resolution
      break;
    }
    const double mid = 0.5 * (worst.a + worst.b);
    Panel l = gk15(f, worst.a, mid);
    Panel r = gk15(f, mid, worst.b);
    total += l.value + r.value - worst.value;
    total_err += l.err + r.err - worst.err;
    heap.push(l);
    heap.push(r);
    ++n;
  }
  return {total, total_err};
}

}  // namespace

QuadResult adaptive_gk(const std::function<double(double)>& f, double a, double b,
                       double tol, int max_intervals) {
  if (a == b) return {0.0, 0.0};
  return adapt(f, {gk15(f, a, b)}, tol, max_intervals);
}

QuadResult adaptive_gk_split(const std::function<double(double)>& f, double a, double b,
                             const std::vector<double>& breakpoints, double tol,
                             int max_intervals) {
  if (a == b) return {0.0, 0.0};
  std::vector<double> pts{a, b};
  for (double p : breakpoints)
    if (p > a && p < b) pts.push_back(p);
  std::sort(pts.begin(), pts.end());
  std::vector<Panel> panels;
  for (size_t i = 0; i + 1 < pts.size(); ++i)
    if (pts[i + 1] > pts[i]) panels.push_back(gk15(f, pts[i], pts[i + 1]));
  return adapt(f, std::move(panels), tol, max_intervals);
}

QuadResult power_weighted_integral(const std::function<double(double)>& g, double c,
                                   double A, double tol) {
  if (A <= 0.0) return {0.0, 0.0};
  const double inv_c = 1.0 / c;
  auto smooth = [&](double v) { return g(std::pow(v, inv_c)); };
  QuadResult r = adaptive_gk(smooth, 0.0, std::pow(A, c), tol * c);
  return {r.value * inv_c, r.error_estimate * inv_c};
}

}  // namespace fwn
