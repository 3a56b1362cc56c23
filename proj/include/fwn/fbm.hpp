#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "fwn/grid.hpp"
#include "fwn/hurst.hpp"

namespace fwn {

enum class GeneratorMethod { cholesky, circulant, m_synthesis };

const char* method_name(GeneratorMethod m);
GeneratorMethod method_from_name(const std::string& name);

struct GeneratorOptions {
  std::uint64_t seed = 0;
  int threads = 0;
  int block_size = 1024;           // paths per work unit (kept even)
  bool with_brownian = false;      // exact generators: add an independent B
  bool unit_variance = false;      // rescale law to Var[B^H(t)] = t^{2H}
  bool retain_spatial = false;     // m_synthesis: keep raw increments per path
  double truncation_factor = 20.0; // spatial radius R = factor * T
  double fine_span = 1.0;          // fine cells cover [-span*T, (1+span)*T]
  int coarse_factor = 128;         // coarse cell width in units of dt
};

/// Spatial cell layout used by the m-synthesis generator. Fine cells align
/// with the time grid so the Brownian driver restricted to [0,T] is exactly
/// the time-grid increment process.
struct SynthesisLayout {
  std::vector<double> edges;    // ascending cell boundaries
  std::vector<double> mids;
  std::vector<double> widths;
  int fine_begin = 0;           // first fine cell
  int fine_count = 0;
  int zero_cell = 0;            // cell whose left edge is t = 0
  double tail_variance = 0.0;   // combined variance of the two tail completions

  int cells() const { return static_cast<int>(mids.size()); }

  static SynthesisLayout build(const HurstModel& model, const TimeGrid& grid,
                               const GeneratorOptions& opts);
};

/// One contiguous range of generated paths, row-major over nodes.
struct PathBatch {
  int first_path = 0;
  int count = 0;
  int n = 0;
  std::vector<double> bh;       // count x n
  std::vector<double> b;        // count x n, empty when absent
  std::vector<double> spatial;  // count x cells, only when retained

  const double* bh_row(int i) const { return bh.data() + static_cast<std::size_t>(i) * n; }
  const double* b_row(int i) const { return b.data() + static_cast<std::size_t>(i) * n; }
};

/// Jointly sampled (B, B^H) ensemble on a time grid.
struct DriverEnsemble {
  TimeGrid grid;
  HurstModel hurst;
  GeneratorMethod method = GeneratorMethod::circulant;
  std::uint64_t seed = 0;
  bool coupled = false;        // B and B^H built from one Gaussian load
  bool has_brownian = false;
  int n_paths = 0;
  std::vector<double> bh;      // n_paths x n
  std::vector<double> b;
  std::shared_ptr<const SynthesisLayout> layout;  // m_synthesis only
  GeneratorOptions options;

  const double* bh_row(int p) const { return bh.data() + static_cast<std::size_t>(p) * grid.n; }
  const double* b_row(int p) const { return b.data() + static_cast<std::size_t>(p) * grid.n; }
};

/// Streaming generator: produces deterministic path blocks, callable
/// concurrently. Results depend only on (seed, method, grid, n_paths).
class DriverSource {
public:
  DriverSource(HurstModel model, TimeGrid grid, GeneratorMethod method, int n_paths,
               GeneratorOptions opts);

  void for_each_batch(const std::function<void(const PathBatch&)>& fn) const;
  DriverEnsemble materialize() const;

  bool coupled() const { return method_ == GeneratorMethod::m_synthesis; }
  bool has_brownian() const {
    return coupled() || opts_.with_brownian;
  }
  const std::shared_ptr<const SynthesisLayout>& layout() const { return layout_; }
  const HurstModel& model() const { return model_; }
  const TimeGrid& grid() const { return grid_; }
  GeneratorMethod method() const { return method_; }
  int n_paths() const { return n_paths_; }
  const GeneratorOptions& options() const { return opts_; }

private:
  HurstModel model_;
  TimeGrid grid_;
  GeneratorMethod method_;
  int n_paths_;
  GeneratorOptions opts_;
  std::shared_ptr<const SynthesisLayout> layout_;
  // circulant spectrum / cholesky factor, prepared once
  std::shared_ptr<const std::vector<double>> circulant_scale_;
  std::shared_ptr<const std::vector<double>> chol_factor_;  // m x m lower, row-major
  std::shared_ptr<const std::vector<std::complex<double>>> fine_kernel_fft_;
  int conv_size_ = 0;

  void fill_batch(std::int64_t first, std::int64_t end, PathBatch& batch) const;
};

/// Autocovariance of the increment process at the given lag,
/// c_h dt^{2H} (|k+1|^{2H} + |k-1|^{2H} - 2|k|^{2H}).
double fgn_covariance(const HurstModel& model, const TimeGrid& grid, int lag);

/// Cov(B(u), B^H(t)) = \int_0^u M_t(s) ds by adaptive quadrature.
double cross_covariance(const HurstModel& model, double u, double t);

DriverEnsemble generate_cholesky(const HurstModel& model, const TimeGrid& grid, int n_paths,
                                 const GeneratorOptions& opts);
DriverEnsemble generate_circulant(const HurstModel& model, const TimeGrid& grid, int n_paths,
                                  const GeneratorOptions& opts);
DriverEnsemble generate_via_m(const HurstModel& model, const TimeGrid& grid, int n_paths,
                              const GeneratorOptions& opts);

/// CSV with header path,node,t,b,bh (b column empty when absent).
void write_ensemble_csv(std::ostream& out, const DriverEnsemble& e);
/// 32-byte header "FWN1" | method | flags | n | n_paths | T(f32) | seed | H,
/// then the B^H plane and (if present) the B plane as little-endian f64.
void write_ensemble_binary(std::ostream& out, const DriverEnsemble& e);
DriverEnsemble read_ensemble_binary(std::istream& in);

}  // namespace fwn
