#include "fwn/wis.hpp"

#include <algorithm>
#include <cmath>

#include "fwn/errors.hpp"
#include "fwn/operator_m.hpp"
#include "fwn/parallel.hpp"
#include "fwn/quadrature.hpp"

namespace fwn {

namespace {

void require_coupled(const DriverEnsemble& driver) {
  if (driver.method != GeneratorMethod::m_synthesis || !driver.coupled || !driver.has_brownian)
    throw ConfigError(
        "integration needs the coupled m_synthesis driver (Brownian increments missing)");
  if (driver.options.unit_variance)
    throw ConfigError("stochastic integration expects the paper normalization, not unit variance");
}

// per-path integrand values phi(t_0..t_{idx-1}) at left endpoints
void integrand_values(const Integrand& phi, const TimeGrid& grid, const double* b_row, int idx,
                      std::vector<double>& out) {
  out.resize(idx);
  switch (phi.kind) {
    case IntegrandKind::deterministic:
      for (int i = 0; i < idx; ++i) out[i] = phi.phi(grid.t(i));
      break;
    case IntegrandKind::first_chaos: {
      double acc = 0.0;
      for (int i = 0; i < idx; ++i) {
        out[i] = acc;  // phi(t_i) = sum_{l<i} h(t_l) dB_l
        acc += phi.chaos_kernel(grid.t(i)) * (b_row[i + 1] - b_row[i]);
      }
      break;
    }
    case IntegrandKind::pathwise_adapted:
      for (int i = 0; i < idx; ++i) out[i] = phi.adapted(i, b_row, grid.n);
      break;
  }
}

// Exact Wick corrections on the driver's synthesis cells:
// kappa_i = sum_{cells in [0,t_i)} h(t_cell) (m(t_{i+1},mid)-m(t_i,mid)) width.
std::vector<double> chaos_corrections(const HurstModel& model, const Integrand& phi,
                                      const DriverEnsemble& driver, int idx) {
  const auto& lay = *driver.layout;
  const TimeGrid& grid = driver.grid;
  std::vector<double> kappa(idx, 0.0);
  std::vector<double> h_vals(idx);
  for (int l = 0; l < idx; ++l) h_vals[l] = phi.chaos_kernel(grid.t(l));
  for (int i = 1; i < idx; ++i) {
    const double t0 = grid.t(i), t1 = grid.t(i + 1);
    double acc = 0.0;
    for (int l = 0; l < i; ++l) {
      const int cell = lay.zero_cell + l;
      const double mid = lay.mids[cell];
      acc += h_vals[l] * (m_indicator(model, t1, mid) - m_indicator(model, t0, mid)) *
             lay.widths[cell];
    }
    kappa[i] = acc;
  }
  return kappa;
}

// Ensemble-estimated corrections for general adapted integrands.
std::vector<double> estimated_corrections(const Integrand& phi, const DriverEnsemble& driver,
                                          int idx, int threads) {
  const TimeGrid& grid = driver.grid;
  const int n_blocks = (driver.n_paths + 4095) / 4096;
  std::vector<std::vector<double>> partials(n_blocks, std::vector<double>(idx, 0.0));
  parallel_blocks(driver.n_paths, 4096, threads, [&](std::int64_t blk, std::int64_t lo, std::int64_t hi) {
    std::vector<double> vals;
    auto& part = partials[blk];
    for (std::int64_t p = lo; p < hi; ++p) {
      const double* b = driver.b_row(static_cast<int>(p));
      const double* bh = driver.bh_row(static_cast<int>(p));
      integrand_values(phi, grid, b, idx, vals);
      for (int i = 0; i < idx; ++i) part[i] += vals[i] * (bh[i + 1] - bh[i]);
    }
  });
  // sample mean of phi_i dBH_i estimates E[phi dBH] (dBH is centered in law)
  std::vector<double> kappa = merge_vectors(partials);
  for (double& k : kappa) k /= static_cast<double>(driver.n_paths);
  return kappa;
}

WisIntegralResult integrate(const HurstModel& model, const Integrand& phi,
                            const DriverEnsemble& driver, const WisOptions& opts,
                            WisMethod method) {
  require_coupled(driver);
  const TimeGrid& grid = driver.grid;
  const double t_end = opts.t < 0.0 ? grid.horizon : opts.t;
  const int idx = node_index(grid, t_end);
  if (idx == 0) throw ConfigError("integration horizon must be positive");

  WisIntegralResult res;
  res.method = method;
  res.t_end = t_end;
  res.node_end = idx;
  res.correction =
      wick_corrections(model, phi, driver, t_end, opts.allow_approximate, opts.threads);
  res.approximate = phi.kind == IntegrandKind::pathwise_adapted;

  res.terminal.assign(driver.n_paths, 0.0);
  if (opts.keep_running)
    res.running.assign(static_cast<std::size_t>(driver.n_paths) * (idx + 1), 0.0);

  parallel_blocks(driver.n_paths, 4096, opts.threads,
                  [&](std::int64_t, std::int64_t lo, std::int64_t hi) {
    std::vector<double> vals;
    for (std::int64_t p = lo; p < hi; ++p) {
      const double* b = driver.b_row(static_cast<int>(p));
      const double* bh = driver.bh_row(static_cast<int>(p));
      integrand_values(phi, grid, b, idx, vals);
      double acc = 0.0;
      double* run = opts.keep_running
                        ? res.running.data() + static_cast<std::size_t>(p) * (idx + 1)
                        : nullptr;
      for (int i = 0; i < idx; ++i) {
        if (run) run[i] = acc;
        acc += vals[i] * (bh[i + 1] - bh[i]) - res.correction[i];
      }
      if (run) run[idx] = acc;
      res.terminal[static_cast<std::size_t>(p)] = acc;
    }
  });
  return res;
}

// \int_0^x h(v)^2 dv on a cached fine dyadic grid (h smooth on [0, t]).
class SquaredKernelCumulative {
public:
  SquaredKernelCumulative(const std::function<double(double)>& h, double t, int n = 8192)
      : dt_(t / n), cum_(n + 1, 0.0) {
    double acc = 0.0;
    double prev = h(0.0) * h(0.0);
    for (int i = 1; i <= n; ++i) {
      const double cur = h(i * dt_) * h(i * dt_);
      acc += 0.5 * (prev + cur) * dt_;
      cum_[i] = acc;
      prev = cur;
    }
  }
  double operator()(double x) const {
    if (x <= 0.0) return 0.0;
    const double pos = x / dt_;
    const int i = std::min(static_cast<int>(pos), static_cast<int>(cum_.size()) - 2);
    const double w = pos - i;
    return cum_[i] * (1.0 - w) + cum_[i + 1] * w;
  }

private:
  double dt_;
  std::vector<double> cum_;
};

double chaos_trace_term(const HurstModel& model, const std::function<double(double)>& h,
                        double t, double tol) {
  auto outer = [&](double u) {
    auto inner = [&](double v) {
      return h(v) * (m_indicator(model, t, v) - m_indicator(model, u, v)) *
             (m_indicator(model, t, u) - m_indicator(model, v, u));
    };
    QuadResult r = adaptive_gk_split(inner, 0.0, t, {u}, 0.5 * tol, 400);
    return h(u) * r.value;
  };
  return adaptive_gk(outer, 0.0, t, tol, 400).value;
}

}  // namespace

Integrand Integrand::deterministic(std::function<double(double)> f, std::string label) {
  Integrand r;
  r.kind = IntegrandKind::deterministic;
  r.phi = std::move(f);
  r.label = std::move(label);
  return r;
}

Integrand Integrand::first_chaos(std::function<double(double)> h, std::string label) {
  Integrand r;
  r.kind = IntegrandKind::first_chaos;
  r.chaos_kernel = std::move(h);
  r.label = std::move(label);
  return r;
}

Integrand Integrand::pathwise(std::function<double(int, const double*, int)> f,
                              std::string label) {
  Integrand r;
  r.kind = IntegrandKind::pathwise_adapted;
  r.adapted = std::move(f);
  r.label = std::move(label);
  return r;
}

int node_index(const TimeGrid& grid, double t) {
  const double pos = t / grid.dt();
  const int idx = static_cast<int>(std::lround(pos));
  if (idx < 0 || idx >= grid.n || std::abs(pos - idx) > 1e-9)
    throw ConfigError("time " + std::to_string(t) + " is not a node of the grid");
  return idx;
}

std::vector<double> wick_corrections(const HurstModel& model, const Integrand& phi,
                                     const DriverEnsemble& driver, double t,
                                     bool allow_estimated, int threads) {
  require_coupled(driver);
  const int idx = node_index(driver.grid, t);
  switch (phi.kind) {
    case IntegrandKind::deterministic:
      return std::vector<double>(idx, 0.0);
    case IntegrandKind::first_chaos:
      return chaos_corrections(model, phi, driver, idx);
    case IntegrandKind::pathwise_adapted:
      if (!allow_estimated)
        throw ContractError(
            "integrand is not first-chaos; rerun in pathwise_adapted (approximate) mode");
      return estimated_corrections(phi, driver, idx, threads);
  }
  return {};
}

WisIntegralResult wiener_integral(const HurstModel& model, const Integrand& phi,
                                  const DriverEnsemble& driver, const WisOptions& opts) {
  if (phi.kind != IntegrandKind::deterministic)
    throw ContractError("wiener_integral needs a deterministic integrand");
  return integrate(model, phi, driver, opts, WisMethod::wiener_m_transform);
}

WisIntegralResult wick_riemann_integral(const HurstModel& model, const Integrand& phi,
                                        const DriverEnsemble& driver, const WisOptions& opts) {
  return integrate(model, phi, driver, opts, WisMethod::wick_riemann);
}

double expected_square(const HurstModel& model, const Integrand& phi, double t) {
  if (t <= 0.0) return 0.0;
  constexpr double tol = 1e-9;
  if (phi.kind == IntegrandKind::deterministic)
    return window_inner_product(model, phi.phi, phi.phi, 0.0, t, tol);
  if (phi.kind != IntegrandKind::first_chaos)
    throw ContractError("expected_square by quadrature needs a deterministic or first-chaos "
                        "integrand; use expected_square_mc for pathwise integrands");

  const auto& h = phi.chaos_kernel;
  SquaredKernelCumulative R(h, t);
  const double c = 2.0 * model.h - 1.0;
  // E-part: fgn_density * iint R(min(s,u)) |s-u|^{2H-2}, as 2x the u<s half
  auto outer = [&](double s) {
    return power_weighted_integral([&](double v) { return R(s - v); }, c, s, 0.25 * tol).value;
  };
  const double term1 = 2.0 * model.fgn_density * adaptive_gk(outer, 0.0, t, tol, 800).value;
  const double trace = chaos_trace_term(model, h, t, 1e-8);
  return term1 + trace;
}

McEstimate expected_square_mc(const HurstModel& model, const Integrand& phi,
                              const DriverEnsemble& driver, double t) {
  require_coupled(driver);
  const TimeGrid& grid = driver.grid;
  const int idx = node_index(grid, t);
  const double dt = grid.dt();

  // Toeplitz weights: w(d) = fgn_density * iint over a lag-d cell pair of
  // |s-u|^{2H-2}, from the exact antiderivative |w|^{2H}/(2H(2H-1)).
  const double twoH = 2.0 * model.h;
  auto prim = [&](double w) { return std::pow(std::abs(w), twoH) / (twoH * (twoH - 1.0)); };
  std::vector<double> toep(idx);
  for (int d = 0; d < idx; ++d)
    toep[d] = model.fgn_density *
              (2.0 * prim(d * dt) - prim((d - 1.0) * dt) - prim((d + 1.0) * dt)) * -1.0;

  const int n_blocks = (driver.n_paths + 4095) / 4096;
  std::vector<MomentSums> partials(n_blocks);
  parallel_blocks(driver.n_paths, 4096, 0, [&](std::int64_t blk, std::int64_t lo, std::int64_t hi) {
    std::vector<double> vals;
    auto& ms = partials[blk];
    for (std::int64_t p = lo; p < hi; ++p) {
      integrand_values(phi, grid, driver.b_row(static_cast<int>(p)), idx, vals);
      double q = 0.0;
      for (int d = 0; d < idx; ++d) {
        double corr = 0.0;
        for (int i = 0; i + d < idx; ++i) corr += vals[i] * vals[i + d];
        q += (d == 0 ? 1.0 : 2.0) * toep[d] * corr;
      }
      ms.add(q);
    }
  });
  MomentSums total = merge_moments(partials);

  McEstimate est;
  est.n = total.n;
  est.value = total.mean();
  est.std_error = total.se_mean();
  if (phi.kind == IntegrandKind::first_chaos)
    est.value += chaos_trace_term(model, phi.chaos_kernel, t, 1e-8);
  return est;
}

BoundCheckResult bound_check(const HurstModel& model, const Integrand& phi,
                             const DriverEnsemble* driver, double t) {
  BoundCheckResult r;
  const double twoH1 = std::pow(t, 2.0 * model.h - 1.0);

  if (phi.kind == IntegrandKind::deterministic) {
    r.lhs = expected_square(model, phi, t);
    const double l2 =
        adaptive_gk([&](double s) { double v = phi.phi(s); return v * v; }, 0.0, t, 1e-11, 800)
            .value;
    r.rhs = model.k_h * l2 * twoH1;
  } else {
    if (!driver) throw ConfigError("bound_check of a stochastic integrand needs a driver");
    WisOptions opts;
    opts.t = t;
    opts.allow_approximate = true;
    WisIntegralResult x = wick_riemann_integral(model, phi, *driver, opts);
    const int idx = x.node_end;
    const double dt = driver->grid.dt();
    const int n_blocks = (driver->n_paths + 4095) / 4096;
    std::vector<MomentSums> sq(n_blocks), l2(n_blocks);
    parallel_blocks(driver->n_paths, 4096, 0,
                    [&](std::int64_t blk, std::int64_t lo, std::int64_t hi) {
      std::vector<double> vals;
      for (std::int64_t p = lo; p < hi; ++p) {
        const double xv = x.terminal[static_cast<std::size_t>(p)];
        sq[blk].add(xv * xv);
        integrand_values(phi, driver->grid, driver->b_row(static_cast<int>(p)), idx, vals);
        double acc = 0.0;
        for (int i = 0; i < idx; ++i) acc += vals[i] * vals[i] * dt;
        l2[blk].add(acc);
      }
    });
    MomentSums msq = merge_moments(sq), ml2 = merge_moments(l2);
    r.lhs = msq.mean();
    r.lhs_se = msq.se_mean();
    r.rhs = model.k_h * ml2.mean() * twoH1;
    r.rhs_se = model.k_h * ml2.se_mean() * twoH1;
  }

  r.ratio = r.rhs > 0.0 ? r.lhs / r.rhs : 0.0;
  r.tight_ratio = r.rhs > 0.0 ? r.lhs / (0.5 * r.rhs) : 0.0;
  double rel = 0.0;
  if (r.lhs > 0.0) rel += (r.lhs_se / r.lhs) * (r.lhs_se / r.lhs);
  if (r.rhs > 0.0) rel += (r.rhs_se / r.rhs) * (r.rhs_se / r.rhs);
  rel = std::sqrt(rel);
  r.pass = r.lhs <= r.rhs * (1.0 + 3.0 * rel);
  return r;
}

ItoSquareResult ito_square_check(const HurstModel& model,
                                 const std::function<double(double)>& sigma,
                                 const DriverEnsemble& driver, double t) {
  ItoSquareResult r;
  Integrand phi = Integrand::deterministic(sigma, "sigma");
  WisOptions opts;
  opts.t = t;
  WisIntegralResult x = wiener_integral(model, phi, driver, opts);
  MomentSums ms;
  for (double v : x.terminal) ms.add(v * v);
  r.lhs = ms.mean();
  r.lhs_se = ms.se_mean();

  // drift term of d(X^2): 2 sigma(s) M^2(sigma 1_[0,s])(s), with the window
  // integral reduced to the one-sided collapsed kernel
  const double c = 2.0 * model.h - 1.0;
  auto drift = [&](double s) {
    const double inner =
        power_weighted_integral([&](double v) { return sigma(s - v); }, c, s, 1e-10).value;
    return 2.0 * sigma(s) * model.msq_kernel_scale * inner;
  };
  r.rhs = adaptive_gk(drift, 0.0, t, 1e-9, 800).value;
  r.pass = std::abs(r.lhs - r.rhs) <= 4.0 * r.lhs_se;
  return r;
}

}  // namespace fwn
