#pragma once

#include <iosfwd>
#include <vector>

namespace fwn {

/// Uniform discretization of [0, T] with n = 2^k + 1 nodes.
struct TimeGrid {
  double horizon = 1.0;
  int n = 0;

  double dt() const { return horizon / (n - 1); }
  double t(int i) const { return horizon * static_cast<double>(i) / (n - 1); }
  int steps() const { return n - 1; }

  /// Throws ConfigError unless T > 0 and n-1 is a power of two.
  static TimeGrid uniform(double T, int n);
};

/// Samples of a real function on a uniform grid x_i = x0 + i*dx.
struct GridFunction {
  double x0 = 0.0;
  double dx = 0.0;
  std::vector<double> values;

  int size() const { return static_cast<int>(values.size()); }
  double x(int i) const { return x0 + dx * i; }
  double span() const { return dx * (size() - 1); }

  /// Symmetric grid covering [-R, R) with n nodes (n a power of two so the
  /// spectral operators apply directly).
  static GridFunction symmetric(double R, int n);

  template <class Fn>
  void fill(Fn&& f) {
    for (int i = 0; i < size(); ++i) values[i] = f(x(i));
  }

  /// Linear interpolation; zero outside the represented domain.
  double interpolate(double xq) const;

  /// Trapezoid integral of values over the grid.
  double trapezoid() const;

  void validate() const;  // finite values, >= 2 nodes

  void write_csv(std::ostream& out) const;
  static GridFunction read_csv(std::istream& in);
};

}  // namespace fwn
