#pragma once

#include <stdexcept>
#include <string>

namespace fwn {

/// Configuration problems: bad grids, missing driver data, malformed specs.
class ConfigError : public std::invalid_argument {
public:
  explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// A quadrature or grid operator could not reach its accuracy target.
/// Carries the achieved error estimate and the truncation tail estimate.
class AccuracyError : public std::runtime_error {
public:
  AccuracyError(const std::string& msg, double achieved, double tail)
      : std::runtime_error(msg), achieved_error(achieved), tail_estimate(tail) {}
  double achieved_error;
  double tail_estimate;
};

/// Numerical failures: non-positive-definite covariance, negative circulant
/// eigenvalues, detected Picard divergence.
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& msg, double detail = 0.0)
      : std::runtime_error(msg), detail_value(detail) {}
  double detail_value;
};

/// Caller violated an operation contract (e.g. wrong integrand kind).
class ContractError : public std::invalid_argument {
public:
  explicit ContractError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Unknown experiment / CLI usage problems.
class UsageError : public std::invalid_argument {
public:
  explicit UsageError(const std::string& msg) : std::invalid_argument(msg) {}
};

}  // namespace fwn
