#include "fwn/grid.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "fwn/errors.hpp"
#include "fwn/fft.hpp"

namespace fwn {

TimeGrid TimeGrid::uniform(double T, int n) {
  if (!(T > 0.0)) throw ConfigError("time grid horizon must be positive");
  if (n < 2 || !is_power_of_two(static_cast<std::size_t>(n - 1)))
    throw ConfigError("time grid needs 2^k + 1 nodes, got " + std::to_string(n));
  return {T, n};
}

GridFunction GridFunction::symmetric(double R, int n) {
  if (!(R > 0.0) || n < 2) throw ConfigError("symmetric grid needs R > 0 and n >= 2");
  GridFunction g;
  g.x0 = -R;
  g.dx = 2.0 * R / n;
  g.values.assign(n, 0.0);
  return g;
}

double GridFunction::interpolate(double xq) const {
  const double pos = (xq - x0) / dx;
  if (pos < 0.0 || pos > size() - 1) return 0.0;
  const int i = std::min(static_cast<int>(pos), size() - 2);
  const double w = pos - i;
  return values[i] * (1.0 - w) + values[i + 1] * w;
}

double GridFunction::trapezoid() const {
  double acc = 0.5 * (values.front() + values.back());
  for (int i = 1; i + 1 < size(); ++i) acc += values[i];
  return acc * dx;
}

void GridFunction::validate() const {
  if (size() < 2) throw ConfigError("grid function needs at least 2 nodes");
  for (double v : values)
    if (!std::isfinite(v)) throw ConfigError("grid function has non-finite values");
}

void GridFunction::write_csv(std::ostream& out) const {
  out << "node,value\n";
  for (int i = 0; i < size(); ++i) out << x(i) << ',' << values[i] << '\n';
}

GridFunction GridFunction::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("node,value", 0) != 0)
    throw ConfigError("grid CSV must start with header node,value");
  std::vector<double> xs, vs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string a, b;
    if (!std::getline(row, a, ',') || !std::getline(row, b))
      throw ConfigError("malformed grid CSV row: " + line);
    xs.push_back(std::stod(a));
    vs.push_back(std::stod(b));
  }
  if (xs.size() < 2) throw ConfigError("grid CSV needs at least 2 rows");
  GridFunction g;
  g.x0 = xs.front();
  g.dx = (xs.back() - xs.front()) / (static_cast<double>(xs.size()) - 1.0);
  g.values = std::move(vs);
  g.validate();
  return g;
}

}  // namespace fwn
