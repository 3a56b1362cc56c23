#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fwn/fbm.hpp"
#include "fwn/rng.hpp"
#include "fwn/wis.hpp"

namespace fwn {

/// Named (t,x) coefficient from the closed registry, so Lipschitz/growth
/// constants stay auditable: zero | const:c | linear:a=<a> | sin | cos | t.
struct Coefficient {
  std::string name;
  std::function<double(double, double)> fn;
  double operator()(double t, double x) const { return fn(t, x); }
};

Coefficient make_coefficient(const std::string& spec);

/// Initial-condition sampler: normal:mu,sd | const:c. Draws come from a
/// dedicated substream, independent of the driver noise.
struct InitialLaw {
  std::string name;
  double mean = 0.0;
  std::function<double(CounterRng&)> sample;
};

InitialLaw make_initial(const std::string& spec);

/// Named fractional coefficient: deterministic registry names, or
/// "wiener:<h-name>" for the first-chaos integrand with kernel h.
Integrand make_sigma(const std::string& spec);

struct SdeSpec {
  Coefficient drift;       // alpha(t, x)
  Coefficient brownian;    // beta(t, x)
  Integrand frac_coeff;    // sigma(t[, omega])
  InitialLaw initial;
  double lipschitz_d = 0.0;
  double growth_c = 0.0;
  double horizon = 1.0;

  /// Growth and Lipschitz spot checks on a (t,x) lattice; ConfigError on
  /// violation of the declared constants.
  void spot_check() const;
  std::string fingerprint() const;
  std::string describe() const;
};

/// Parses the JSON spec format, e.g.
/// {"alpha":"linear:a=-1","beta":"zero","sigma":"const:1",
///  "Z":"normal:0,1","T":1,"D":1,"C":1}. Runs the spot checks.
SdeSpec parse_sde_spec(const std::string& json_text);
SdeSpec builtin_sde_spec(const std::string& name);

enum class SolveMethod { picard, euler };

struct SolveResult {
  SolveMethod method = SolveMethod::picard;
  int n_paths = 0;
  int n = 0;
  double horizon = 0.0;
  std::vector<double> terminal;        // per-path X(T)
  std::vector<double> paths;           // n_paths x n when requested
  std::vector<double> iterates_delta;  // ||Y^{k+1}-Y^k||_{L2(lambda x P)} per k
  int k_used = 0;
  double fixed_point_residual = 0.0;
  bool approximate = false;
};

struct PicardOptions {
  int k_max = 12;
  double tol = 1e-4;
  int threads = 0;
  bool keep_paths = false;
  bool check_divergence = true;
};

/// Picard iteration Y^{k+1} = X_0 + int alpha(s,Y^k) ds + int beta(s,Y^k) dB
/// + int sigma dB^H, the fractional term computed once per path. Streams the
/// ensemble in blocks twice: once for the iterate norms, once to emit the
/// converged iterate.
SolveResult picard_solve(const SdeSpec& spec, const DriverEnsemble& driver,
                         const PicardOptions& opts = {});

/// Explicit left-point scheme with the Wick-corrected fractional increment.
SolveResult euler_solve(const SdeSpec& spec, const DriverEnsemble& driver, int threads = 0,
                        bool keep_paths = false);

struct ContractionReport {
  std::vector<double> deltas;    // delta(k), k = 0..k_max
  std::vector<double> ratios;    // delta(k+1)/delta(k)
  std::vector<double> envelope;  // (A2^{k+1} T^{k+2} / (k+2)!)^{1/2}
  double fitted_a2 = 0.0;
  bool geometric_after_2 = true;  // ratios <= 0.9 for k in [2, 6]
  double cauchy_tail = 0.0;       // sum of deltas beyond the last recorded k
};

ContractionReport contraction_experiment(const SdeSpec& spec, const DriverEnsemble& driver,
                                         int k_max, int threads = 0);

struct GronwallReport {
  std::vector<double> w;         // E|X_t - Xhat_t|^2 per node
  std::vector<double> w_se;
  std::vector<double> bound;     // 3 E|Z-Zhat|^2 exp(3 T D^2 t)
  double initial_gap = 0.0;      // E|Z - Zhat|^2
  bool pass = true;
};

/// Solves twice on the same driver paths with Z and Zhat = shift(Z) and
/// compares E|X-Xhat|^2 against the Gronwall envelope at every node.
GronwallReport gronwall_experiment(const SdeSpec& spec, const DriverEnsemble& driver,
                                   const std::function<double(double)>& shift,
                                   int threads = 0);

}  // namespace fwn
