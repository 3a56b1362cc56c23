#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fwn/fbm.hpp"
#include "fwn/hurst.hpp"

namespace fwn {

enum class IntegrandKind { deterministic, first_chaos, pathwise_adapted };

/// An integrand for the stochastic integral against B^H. Deterministic
/// integrands carry phi(s); first-chaos integrands carry the kernel h with
/// phi(s) = \int_0^s h dB; pathwise integrands compute phi(t_i) from the
/// Brownian path prefix (and must not look ahead).
struct Integrand {
  IntegrandKind kind = IntegrandKind::deterministic;
  std::string label;
  std::function<double(double)> phi;
  std::function<double(double)> chaos_kernel;
  std::function<double(int, const double*, int)> adapted;  // (node, b_path, n)

  static Integrand deterministic(std::function<double(double)> f, std::string label);
  static Integrand first_chaos(std::function<double(double)> h, std::string label);
  static Integrand pathwise(std::function<double(int, const double*, int)> f, std::string label);
};

enum class WisMethod { wiener_m_transform, wick_riemann };

struct WisIntegralResult {
  WisMethod method = WisMethod::wiener_m_transform;
  double t_end = 0.0;
  bool approximate = false;           // ensemble-estimated Wick correction
  std::vector<double> terminal;       // per path X(t_end)
  std::vector<double> running;        // n_paths x (node_end+1), when requested
  std::vector<double> correction;     // per-node accumulated Wick correction
  int node_end = 0;
};

struct WisOptions {
  double t = -1.0;          // integrate up to t (must be a grid node); -1 -> horizon
  bool keep_running = false;
  bool allow_approximate = false;  // accept pathwise_adapted integrands
  int threads = 0;
};

/// WIS integral of a deterministic integrand: per path the cumulative sums
/// of phi(t_l) dB^H_l, which equal the M-transform Riemann sums
/// sum_j M(phi 1_[0,t])(s_j) dB_j exactly on the synthesis grid.
WisIntegralResult wiener_integral(const HurstModel& model, const Integrand& phi,
                                  const DriverEnsemble& driver, const WisOptions& opts = {});

/// Forward Wick-Riemann integral sum_i [phi(t_i) dB^H_i - kappa_i] with the
/// correction kappa_i = Cov(phi(t_i), dB^H_i) evaluated by midpoint
/// quadrature on the driver's own synthesis cells (exact in law for
/// first-chaos integrands).
WisIntegralResult wick_riemann_integral(const HurstModel& model, const Integrand& phi,
                                        const DriverEnsemble& driver, const WisOptions& opts = {});

/// E[X^2(t)] for X = \int_0^t phi dB^H by quadrature. Deterministic: the
/// fgn-density double integral (equivalently int 2 phi M^2(phi 1_[0,s])(s) ds).
/// First chaos: adds the Gaussian trace term; exact. Throws ContractError for
/// pathwise integrands (use the MC form).
double expected_square(const HurstModel& model, const Integrand& phi, double t);

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long long n = 0;
};

/// Monte-Carlo second moment: ensemble average of the pathwise double
/// integral against the collapsed M^2 kernel, plus the first-chaos trace
/// completion when the kernel is known. `approximate` mirrors the integrand.
McEstimate expected_square_mc(const HurstModel& model, const Integrand& phi,
                              const DriverEnsemble& driver, double t);

struct BoundCheckResult {
  double lhs = 0.0, lhs_se = 0.0;
  double rhs = 0.0, rhs_se = 0.0;
  double ratio = 0.0;        // lhs / rhs
  double tight_ratio = 0.0;  // lhs / (rhs/2), the 2C_H^2-form comparison
  bool pass = false;
};

/// Evaluates the fundamental L2 estimate: lhs = E[X^2(t)], rhs =
/// k_h * E[int_0^t phi^2 ds] * t^{2H-1}. Stochastic integrands need a
/// coupled driver for both sides.
BoundCheckResult bound_check(const HurstModel& model, const Integrand& phi,
                             const DriverEnsemble* driver, double t);

struct ItoSquareResult {
  double lhs = 0.0, lhs_se = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

/// For f(x) = x^2: compares Monte-Carlo E[X^2(t)] with the integrated drift
/// term 2 sigma(s) M^2(sigma 1_[0,s])(s) of the fractional Ito formula.
ItoSquareResult ito_square_check(const HurstModel& model,
                                 const std::function<double(double)>& sigma,
                                 const DriverEnsemble& driver, double t);

/// Grid node index for time t; ConfigError if t is not (close to) a node.
int node_index(const TimeGrid& grid, double t);

/// Per-node Wick corrections kappa_i for the forward sums of phi against
/// B^H: zeros for deterministic phi, the exact synthesis-grid covariances
/// for first-chaos phi, ensemble estimates for pathwise integrands (only
/// when allowed).
std::vector<double> wick_corrections(const HurstModel& model, const Integrand& phi,
                                     const DriverEnsemble& driver, double t,
                                     bool allow_estimated, int threads = 0);

}  // namespace fwn
