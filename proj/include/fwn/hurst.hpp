#pragma once

#include <string>

namespace fwn {

/// Normalizing constant of the singular-kernel form of the operator M,
/// [2*Gamma(H-1/2)*cos(pi/2*(H-1/2))]^{-1}. Throws std::domain_error outside
/// (1/2, 1).
double hurst_c(double H);

/// Constant of the fundamental L2 bound, 4*c_h^2*(pi*5^{2H-1}/(2H-1) + 2/(1-H)).
double hurst_k(double H);

enum class PrefactorChoice { printed, derived, least_squares };

/// Outcome of fitting the indicator-image prefactor against the variance
/// identity  \int M_t(x)^2 dx = 2*c_h*t^{2H}  on t in {0.5, 1, 2}.
struct Calibration {
  double candidate_printed = 0.0;   // 1/c_h
  double candidate_derived = 0.0;   // c_h/(H-1/2), from antidifferentiating the kernel
  double fitted = 0.0;              // least-squares fit of the one free scale
  double rel_err_printed = 0.0;     // worst relative miss of the identity over the t set
  double rel_err_derived = 0.0;
  double rel_err_fitted = 0.0;
  PrefactorChoice adopted = PrefactorChoice::least_squares;
  double adopted_value = 0.0;

  std::string adopted_name() const;
};

Calibration calibrate_prefactor(double H);

/// The Hurst parameter with every derived constant the library needs.
/// All fields are plain values; instances are freely copyable and immutable
/// in practice.
struct HurstModel {
  double h = 0.0;              // Hurst parameter, in (1/2, 1)
  double c_h = 0.0;            // paper normalizing constant
  double k_h = 0.0;            // L2-bound constant K(H)
  double m_prefactor = 0.0;    // calibrated closed-form prefactor of M_t
  double kernel_scale = 0.0;   // m_prefactor*(H-1/2): constant of the kernel form of M
  double msq_kernel_scale = 0.0;  // kernel_scale^2 * \int|u|^{H-3/2}|1-u|^{H-3/2}du
  double fgn_density = 0.0;    // 2H(2H-1)c_h: weight of |s-u|^{2H-2} in (f,g)_H

  double alpha() const { return h - 0.5; }  // kernel exponent a = H-1/2

  static HurstModel create(double H);
};

}  // namespace fwn
