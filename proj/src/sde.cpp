#include "fwn/sde.hpp"

#include <cmath>
#include <cstdint>
#include <sstream>

#include "json.hpp"

#include "fwn/errors.hpp"
#include "fwn/parallel.hpp"

namespace fwn {

namespace {

double parse_number(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric parameter '" + s + "' in " + what);
  }
}

// running fractional integral F_i = sum_{l<i} sigma(t_l) dBH_l - kappa_l
void fractional_running(const Integrand& sigma, const DriverEnsemble& driver,
                        const std::vector<double>& kappa, int path, double* out) {
  const TimeGrid& grid = driver.grid;
  const int n = grid.n;
  const double* bh = driver.bh_row(path);
  const double* b = driver.b_row(path);
  out[0] = 0.0;
  if (sigma.kind == IntegrandKind::deterministic) {
    for (int i = 0; i + 1 < n; ++i)
      out[i + 1] = out[i] + sigma.phi(grid.t(i)) * (bh[i + 1] - bh[i]);
    return;
  }
  if (sigma.kind == IntegrandKind::first_chaos) {
    double phi = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
      out[i + 1] = out[i] + phi * (bh[i + 1] - bh[i]) - kappa[i];
      phi += sigma.chaos_kernel(grid.t(i)) * (b[i + 1] - b[i]);
    }
    return;
  }
  for (int i = 0; i + 1 < n; ++i) {
    const double phi = sigma.adapted(i, b, n);
    out[i + 1] = out[i] + phi * (bh[i + 1] - bh[i]) - kappa[i];
  }
}

// One Picard application: y_next = z + cumtrapz(alpha(., y)) + cumleft(beta(., y) dB) + F.
void picard_apply(const SdeSpec& spec, const DriverEnsemble& driver, int path,
                  const double* y, const double* frac, double z, double* y_next) {
  const TimeGrid& grid = driver.grid;
  const int n = grid.n;
  const double dt = grid.dt();
  const double* b = driver.b_row(path);
  double drift = 0.0, brown = 0.0;
  double alpha_prev = spec.drift(0.0, y[0]);
  y_next[0] = z;
  for (int i = 0; i + 1 < n; ++i) {
    const double alpha_next = spec.drift(grid.t(i + 1), y[i + 1]);
    drift += 0.5 * dt * (alpha_prev + alpha_next);
    alpha_prev = alpha_next;
    brown += spec.brownian(grid.t(i), y[i]) * (b[i + 1] - b[i]);
    y_next[i + 1] = z + drift + brown + frac[i + 1];
  }
}

double trapz_sq_diff(const double* a, const double* b, int n, double dt) {
  double acc = 0.5 * ((a[0] - b[0]) * (a[0] - b[0]) + (a[n - 1] - b[n - 1]) * (a[n - 1] - b[n - 1]));
  for (int i = 1; i + 1 < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc * dt;
}

struct PicardPassResult {
  std::vector<double> deltas;  // L2(lambda x P) norms, k = 0..k_upper-1
};

// Streams blocks, iterating each to k_upper applications. When emit >= 0 the
// iterate with that index is written through sink(path, row).
PicardPassResult picard_pass(const SdeSpec& spec, const DriverEnsemble& driver, int k_upper,
                             int emit, int threads,
                             const std::function<void(int, const double*)>& sink) {
  const int n = driver.grid.n;
  const double dt = driver.grid.dt();
  std::vector<double> kappa;
  if (spec.frac_coeff.kind != IntegrandKind::deterministic)
    kappa = wick_corrections(driver.hurst, spec.frac_coeff, driver, driver.grid.horizon, true,
                             threads);

  const std::int64_t block = 1024;
  const int n_blocks = static_cast<int>((driver.n_paths + block - 1) / block);
  std::vector<std::vector<double>> delta_parts(n_blocks, std::vector<double>(std::max(k_upper, 0), 0.0));

  parallel_blocks(driver.n_paths, block, threads,
                  [&](std::int64_t blk, std::int64_t lo, std::int64_t hi) {
    std::vector<double> frac(n), y(n), y_next(n);
    auto& dparts = delta_parts[blk];
    for (std::int64_t p = lo; p < hi; ++p) {
      CounterRng zrng(driver.seed, RngStream::initial, static_cast<std::uint64_t>(p));
      const double z = spec.initial.sample(zrng);
      fractional_running(spec.frac_coeff, driver, kappa, static_cast<int>(p), frac.data());
      std::fill(y.begin(), y.end(), z);  // Y^{(0)} = X_0
      if (emit == 0) sink(static_cast<int>(p), y.data());
      for (int k = 0; k < k_upper; ++k) {
        picard_apply(spec, driver, static_cast<int>(p), y.data(), frac.data(), z, y_next.data());
        dparts[k] += trapz_sq_diff(y_next.data(), y.data(), n, dt);
        std::swap(y, y_next);
        if (emit == k + 1) sink(static_cast<int>(p), y.data());
      }
    }
  });

  PicardPassResult res;
  res.deltas = merge_vectors(delta_parts);
  for (double& d : res.deltas) d = std::sqrt(d / driver.n_paths);
  return res;
}

void check_divergence(const std::vector<double>& deltas, const SdeSpec& spec) {
  int rising = 0;
  for (std::size_t k = 3; k < deltas.size(); ++k) {
    rising = deltas[k] > deltas[k - 1] ? rising + 1 : 0;
    if (rising >= 3) {
      std::ostringstream msg;
      msg << "Picard iteration diverges (D=" << spec.lipschitz_d << ", T=" << spec.horizon
          << "); contraction needs a smaller D*T";
      throw NumericError(msg.str(), deltas[k]);
    }
  }
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

Coefficient make_coefficient(const std::string& spec) {
  if (spec == "zero") return {spec, [](double, double) { return 0.0; }};
  if (spec == "sin") return {spec, [](double t, double) { return std::sin(t); }};
  if (spec == "cos") return {spec, [](double t, double) { return std::cos(t); }};
  if (spec == "t") return {spec, [](double t, double) { return t; }};
  if (spec.rfind("const:", 0) == 0) {
    const double c = parse_number(spec.substr(6), "const coefficient");
    return {spec, [c](double, double) { return c; }};
  }
  if (spec.rfind("linear:a=", 0) == 0) {
    const double a = parse_number(spec.substr(9), "linear coefficient");
    return {spec, [a](double, double x) { return a * x; }};
  }
  throw ConfigError("unknown coefficient '" + spec +
                    "' (registry: zero|const:c|linear:a=<a>|sin|cos|t)");
}

InitialLaw make_initial(const std::string& spec) {
  if (spec.rfind("normal:", 0) == 0) {
    const std::string args = spec.substr(7);
    const auto comma = args.find(',');
    if (comma == std::string::npos) throw ConfigError("initial law normal needs mu,sd");
    const double mu = parse_number(args.substr(0, comma), "initial mean");
    const double sd = parse_number(args.substr(comma + 1), "initial sd");
    return {spec, mu, [mu, sd](CounterRng& rng) { return mu + sd * rng.normal(); }};
  }
  if (spec.rfind("const:", 0) == 0) {
    const double c = parse_number(spec.substr(6), "initial value");
    return {spec, c, [c](CounterRng&) { return c; }};
  }
  throw ConfigError("unknown initial law '" + spec + "' (registry: normal:mu,sd|const:c)");
}

Integrand make_sigma(const std::string& spec) {
  if (spec.rfind("wiener:", 0) == 0) {
    const std::string inner = spec.substr(7);
    Coefficient h = make_coefficient(inner);
    return Integrand::first_chaos([h](double u) { return h(u, 0.0); }, spec);
  }
  Coefficient c = make_coefficient(spec);
  return Integrand::deterministic([c](double s) { return c(s, 0.0); }, spec);
}

void SdeSpec::spot_check() const {
  const double xs[] = {-10.0, -5.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 5.0, 10.0};
  const double tol = 1e-9;
  for (int it = 0; it <= 8; ++it) {
    const double t = horizon * it / 8.0;
    const double sig = frac_coeff.kind == IntegrandKind::deterministic
                           ? std::abs(frac_coeff.phi(t))
                           : 0.0;  // stochastic sigma checked only through its kernel class
    for (double x : xs) {
      const double growth = std::abs(drift(t, x)) + std::abs(brownian(t, x)) + sig;
      if (growth > growth_c * (1.0 + std::abs(x)) + tol)
        throw ConfigError("growth check failed at (t=" + std::to_string(t) +
                          ", x=" + std::to_string(x) + "): declared C=" + std::to_string(growth_c));
      for (double y : xs) {
        const double lip = std::abs(drift(t, x) - drift(t, y)) +
                           std::abs(brownian(t, x) - brownian(t, y));
        if (lip > lipschitz_d * std::abs(x - y) + tol)
          throw ConfigError("Lipschitz check failed at (t=" + std::to_string(t) +
                            ", x=" + std::to_string(x) + ", y=" + std::to_string(y) +
                            "): declared D=" + std::to_string(lipschitz_d));
      }
    }
  }
}

std::string SdeSpec::describe() const {
  std::ostringstream os;
  os << "alpha=" << drift.name << ";beta=" << brownian.name << ";sigma=" << frac_coeff.label
     << ";Z=" << initial.name << ";T=" << horizon << ";D=" << lipschitz_d << ";C=" << growth_c;
  return os.str();
}

std::string SdeSpec::fingerprint() const {
  std::ostringstream os;
  os << std::hex << fnv1a(describe());
  return os.str();
}

SdeSpec parse_sde_spec(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("SDE spec is not valid JSON: ") + e.what());
  }
  for (const char* key : {"alpha", "beta", "sigma", "Z", "T", "D", "C"})
    if (!j.contains(key)) throw ConfigError(std::string("SDE spec missing field '") + key + "'");
  SdeSpec s;
  s.drift = make_coefficient(j["alpha"].get<std::string>());
  s.brownian = make_coefficient(j["beta"].get<std::string>());
  s.frac_coeff = make_sigma(j["sigma"].get<std::string>());
  s.initial = make_initial(j["Z"].get<std::string>());
  s.horizon = j["T"].get<double>();
  s.lipschitz_d = j["D"].get<double>();
  s.growth_c = j["C"].get<double>();
  if (!(s.horizon > 0.0)) throw ConfigError("SDE spec needs T > 0");
  s.spot_check();
  return s;
}

SdeSpec builtin_sde_spec(const std::string& name) {
  auto build = [](const char* a, const char* b, const char* sg, const char* z, double T,
                  double D, double C) {
    SdeSpec s;
    s.drift = make_coefficient(a);
    s.brownian = make_coefficient(b);
    s.frac_coeff = make_sigma(sg);
    s.initial = make_initial(z);
    s.horizon = T;
    s.lipschitz_d = D;
    s.growth_c = C;
    s.spot_check();
    return s;
  };
  if (name == "linear") return build("linear:a=-1", "zero", "const:1", "normal:1,1", 1.0, 1.0, 1.0);
  if (name == "linear_bm")
    return build("linear:a=-1", "const:0.2", "const:1", "normal:1,1", 1.0, 1.0, 1.2);
  if (name == "constant_map")
    return build("zero", "zero", "const:1", "normal:0,1", 1.0, 0.0, 1.0);
  if (name == "linear_cos") return build("linear:a=-1", "zero", "cos", "normal:0,1", 1.0, 1.0, 1.0);
  if (name == "gronwall") return build("linear:a=-1", "zero", "const:1", "normal:0,1", 1.0, 1.0, 1.0);
  if (name == "chaos") return build("linear:a=-1", "zero", "wiener:const:1", "normal:0,1", 1.0, 1.0, 1.0);
  if (name == "stiff") return build("linear:a=-30", "zero", "const:1", "normal:0,1", 1.0, 30.0, 30.0);
  throw ConfigError("unknown builtin SDE spec '" + name + "'");
}

SolveResult picard_solve(const SdeSpec& spec, const DriverEnsemble& driver,
                         const PicardOptions& opts) {
  if (std::abs(spec.horizon - driver.grid.horizon) > 1e-12)
    throw ConfigError("spec horizon and driver grid horizon differ");
  SolveResult res;
  res.method = SolveMethod::picard;
  res.n_paths = driver.n_paths;
  res.n = driver.grid.n;
  res.horizon = spec.horizon;
  res.approximate = spec.frac_coeff.kind == IntegrandKind::pathwise_adapted;

  // pass 1: iterate norms up to k_max (one extra for the residual)
  PicardPassResult pass =
      picard_pass(spec, driver, opts.k_max + 1, -1, opts.threads, [](int, const double*) {});
  if (opts.check_divergence) check_divergence(pass.deltas, spec);

  int k_used = opts.k_max;
  for (int k = 0; k < opts.k_max; ++k)
    if (pass.deltas[k] < opts.tol) {
      k_used = k + 1;  // Y^{(k+1)} is the converged iterate
      break;
    }
  res.k_used = k_used;
  res.iterates_delta.assign(pass.deltas.begin(), pass.deltas.begin() + std::min<int>(k_used + 1, pass.deltas.size()));
  res.fixed_point_residual = pass.deltas[std::min<int>(k_used, pass.deltas.size() - 1)];

  // pass 2: emit the chosen iterate
  res.terminal.assign(driver.n_paths, 0.0);
  if (opts.keep_paths)
    res.paths.assign(static_cast<std::size_t>(driver.n_paths) * driver.grid.n, 0.0);
  const int n = driver.grid.n;
  picard_pass(spec, driver, k_used, k_used, opts.threads, [&](int path, const double* row) {
    res.terminal[path] = row[n - 1];
    if (opts.keep_paths)
      std::copy(row, row + n, res.paths.begin() + static_cast<std::size_t>(path) * n);
  });
  return res;
}

SolveResult euler_solve(const SdeSpec& spec, const DriverEnsemble& driver, int threads,
                        bool keep_paths) {
  if (std::abs(spec.horizon - driver.grid.horizon) > 1e-12)
    throw ConfigError("spec horizon and driver grid horizon differ");
  const TimeGrid& grid = driver.grid;
  const int n = grid.n;
  const double dt = grid.dt();
  std::vector<double> kappa(n - 1, 0.0);
  if (spec.frac_coeff.kind != IntegrandKind::deterministic)
    kappa = wick_corrections(driver.hurst, spec.frac_coeff, driver, grid.horizon, true, threads);

  SolveResult res;
  res.method = SolveMethod::euler;
  res.n_paths = driver.n_paths;
  res.n = n;
  res.horizon = spec.horizon;
  res.k_used = 0;
  res.approximate = spec.frac_coeff.kind == IntegrandKind::pathwise_adapted;
  res.terminal.assign(driver.n_paths, 0.0);
  if (keep_paths) res.paths.assign(static_cast<std::size_t>(driver.n_paths) * n, 0.0);

  parallel_blocks(driver.n_paths, 1024, threads, [&](std::int64_t, std::int64_t lo, std::int64_t hi) {
    std::vector<double> x(n);
    for (std::int64_t p = lo; p < hi; ++p) {
      CounterRng zrng(driver.seed, RngStream::initial, static_cast<std::uint64_t>(p));
      const double* b = driver.b_row(static_cast<int>(p));
      const double* bh = driver.bh_row(static_cast<int>(p));
      x[0] = spec.initial.sample(zrng);
      double chaos_phi = 0.0;
      for (int i = 0; i + 1 < n; ++i) {
        const double t = grid.t(i);
        double sig_inc;
        if (spec.frac_coeff.kind == IntegrandKind::deterministic) {
          sig_inc = spec.frac_coeff.phi(t) * (bh[i + 1] - bh[i]);
        } else if (spec.frac_coeff.kind == IntegrandKind::first_chaos) {
          sig_inc = chaos_phi * (bh[i + 1] - bh[i]) - kappa[i];
          chaos_phi += spec.frac_coeff.chaos_kernel(t) * (b[i + 1] - b[i]);
        } else {
          sig_inc = spec.frac_coeff.adapted(i, b, n) * (bh[i + 1] - bh[i]) - kappa[i];
        }
        x[i + 1] = x[i] + spec.drift(t, x[i]) * dt + spec.brownian(t, x[i]) * (b[i + 1] - b[i]) +
                   sig_inc;
      }
      res.terminal[static_cast<std::size_t>(p)] = x[n - 1];
      if (keep_paths)
        std::copy(x.begin(), x.end(), res.paths.begin() + static_cast<std::size_t>(p) * n);
    }
  });
  return res;
}

ContractionReport contraction_experiment(const SdeSpec& spec, const DriverEnsemble& driver,
                                         int k_max, int threads) {
  PicardPassResult pass =
      picard_pass(spec, driver, k_max + 1, -1, threads, [](int, const double*) {});
  ContractionReport rep;
  rep.deltas = pass.deltas;
  for (std::size_t k = 0; k + 1 < rep.deltas.size(); ++k)
    rep.ratios.push_back(rep.deltas[k] > 0.0 ? rep.deltas[k + 1] / rep.deltas[k] : 0.0);

  // log-least-squares fit of A2 on the first two deltas (reported, never asserted)
  const double T = spec.horizon;
  if (rep.deltas.size() >= 2 && rep.deltas[0] > 0.0 && rep.deltas[1] > 0.0) {
    double num = 0.0, den = 0.0;
    for (int k = 0; k <= 1; ++k) {
      const double ck = 0.5 * ((k + 2.0) * std::log(T) - std::lgamma(k + 3.0));
      num += (k + 1.0) * (std::log(rep.deltas[k]) - ck);
      den += 0.25 * (k + 1.0) * (k + 1.0);
    }
    rep.fitted_a2 = std::exp(0.5 * num / den);
  }
  for (std::size_t k = 0; k < rep.deltas.size(); ++k)
    rep.envelope.push_back(std::exp(0.5 * ((k + 1.0) * std::log(std::max(rep.fitted_a2, 1e-300)) +
                                           (k + 2.0) * std::log(T) - std::lgamma(k + 3.0))));

  for (std::size_t k = 2; k <= 6 && k < rep.ratios.size(); ++k)
    if (rep.ratios[k] > 0.9) rep.geometric_after_2 = false;
  const std::size_t tail_from = rep.deltas.size() >= 3 ? rep.deltas.size() - 3 : 0;
  for (std::size_t k = tail_from; k < rep.deltas.size(); ++k) rep.cauchy_tail += rep.deltas[k];
  return rep;
}

GronwallReport gronwall_experiment(const SdeSpec& spec, const DriverEnsemble& driver,
                                   const std::function<double(double)>& shift, int threads) {
  const int n = driver.grid.n;
  const double dt = driver.grid.dt();
  const int k_fix = 12;
  std::vector<double> kappa;
  if (spec.frac_coeff.kind != IntegrandKind::deterministic)
    kappa = wick_corrections(driver.hurst, spec.frac_coeff, driver, driver.grid.horizon, true,
                             threads);

  const std::int64_t block = 1024;
  const int n_blocks = static_cast<int>((driver.n_paths + block - 1) / block);
  // per node: sum of d^2 and d^4 with d = X - Xhat, plus the initial gap
  std::vector<std::vector<double>> part2(n_blocks, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> part4(n_blocks, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> part0(n_blocks, std::vector<double>(1, 0.0));

  parallel_blocks(driver.n_paths, block, threads,
                  [&](std::int64_t blk, std::int64_t lo, std::int64_t hi) {
    std::vector<double> frac(n), y(n), y_next(n), yh(n), yh_next(n);
    for (std::int64_t p = lo; p < hi; ++p) {
      CounterRng zrng(driver.seed, RngStream::initial, static_cast<std::uint64_t>(p));
      const double z = spec.initial.sample(zrng);
      const double zh = shift(z);
      fractional_running(spec.frac_coeff, driver, kappa, static_cast<int>(p), frac.data());
      std::fill(y.begin(), y.end(), z);
      std::fill(yh.begin(), yh.end(), zh);
      for (int k = 0; k < k_fix; ++k) {
        picard_apply(spec, driver, static_cast<int>(p), y.data(), frac.data(), z, y_next.data());
        picard_apply(spec, driver, static_cast<int>(p), yh.data(), frac.data(), zh, yh_next.data());
        std::swap(y, y_next);
        std::swap(yh, yh_next);
      }
      part0[blk][0] += (z - zh) * (z - zh);
      for (int i = 0; i < n; ++i) {
        const double d2 = (y[i] - yh[i]) * (y[i] - yh[i]);
        part2[blk][i] += d2;
        part4[blk][i] += d2 * d2;
      }
    }
  });

  GronwallReport rep;
  std::vector<double> sum2 = merge_vectors(part2);
  std::vector<double> sum4 = merge_vectors(part4);
  rep.initial_gap = merge_vectors(part0)[0] / driver.n_paths;
  rep.w.resize(n);
  rep.w_se.resize(n);
  rep.bound.resize(n);
  const double A = 3.0 * spec.horizon * spec.lipschitz_d * spec.lipschitz_d;
  for (int i = 0; i < n; ++i) {
    rep.w[i] = sum2[i] / driver.n_paths;
    const double var = std::max(0.0, sum4[i] / driver.n_paths - rep.w[i] * rep.w[i]);
    rep.w_se[i] = std::sqrt(var / driver.n_paths);
    rep.bound[i] = 3.0 * rep.initial_gap * std::exp(A * i * dt);
    const double rel = rep.w[i] > 0.0 ? rep.w_se[i] / rep.w[i] : 0.0;
    if (rep.w[i] > rep.bound[i] * (1.0 + 3.0 * rel)) rep.pass = false;
  }
  return rep;
}

}  // namespace fwn
