#include "fwn/fbm.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <istream>
#include <ostream>

#include "fwn/errors.hpp"
#include "fwn/fft.hpp"
#include "fwn/operator_m.hpp"
#include "fwn/parallel.hpp"
#include "fwn/quadrature.hpp"
#include "fwn/rng.hpp"

namespace fwn {

namespace {

double sgn_pow(double x, double a) {
  if (x == 0.0) return 0.0;
  return x > 0.0 ? std::pow(x, a) : -std::pow(-x, a);
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// increment autocovariance without the lag-domain guard (the circulant
// embedding needs one lag past the grid)
double fgn_cov_raw(const HurstModel& model, double dt, int lag) {
  const double twoH = 2.0 * model.h;
  const double k = static_cast<double>(lag);
  return model.c_h * std::pow(dt, twoH) *
         (std::pow(k + 1.0, twoH) + std::pow(std::abs(k - 1.0), twoH) - 2.0 * std::pow(k, twoH));
}

}  // namespace

const char* method_name(GeneratorMethod m) {
  switch (m) {
    case GeneratorMethod::cholesky: return "cholesky";
    case GeneratorMethod::circulant: return "circulant";
    default: return "m_synthesis";
  }
}

GeneratorMethod method_from_name(const std::string& name) {
  if (name == "cholesky") return GeneratorMethod::cholesky;
  if (name == "circulant") return GeneratorMethod::circulant;
  if (name == "m_synthesis") return GeneratorMethod::m_synthesis;
  throw ConfigError("unknown generator method: " + name);
}

double fgn_covariance(const HurstModel& model, const TimeGrid& grid, int lag) {
  if (lag < 0 || lag >= grid.n - 1)
    throw std::domain_error("fgn_covariance: lag must lie in [0, n-1)");
  return fgn_cov_raw(model, grid.dt(), lag);
}

double cross_covariance(const HurstModel& model, double u, double t) {
  if (u == 0.0) return 0.0;
  constexpr double tol = 1e-10;
  QuadResult r = adaptive_gk_split([&](double s) { return m_indicator(model, t, s); }, 0.0, u,
                                   {0.0, t}, tol, 4000);
  if (r.error_estimate > 10.0 * tol)
    throw AccuracyError("cross_covariance: quadrature above tolerance", r.error_estimate, 0.0);
  return r.value;
}

SynthesisLayout SynthesisLayout::build(const HurstModel& model, const TimeGrid& grid,
                                       const GeneratorOptions& opts) {
  const double T = grid.horizon;
  const double dt = grid.dt();
  const int steps = grid.steps();
  const int span_steps = std::max(1, static_cast<int>(std::lround(opts.fine_span))) * steps;

  SynthesisLayout lay;
  const double fine_lo = -dt * span_steps;
  const double fine_hi = T + dt * span_steps;
  const int nf = 2 * span_steps + steps;

  const double cw = opts.coarse_factor * dt;
  const double want = opts.truncation_factor * T;
  const int n_coarse = std::max(1, static_cast<int>(std::ceil((want - (-fine_lo)) / cw)));

  lay.edges.reserve(2 * n_coarse + nf + 1);
  for (int j = n_coarse; j >= 1; --j) lay.edges.push_back(fine_lo - cw * j);
  for (int j = 0; j <= nf; ++j) lay.edges.push_back(fine_lo + dt * j);
  for (int j = 1; j <= n_coarse; ++j) lay.edges.push_back(fine_hi + cw * j);

  lay.fine_begin = n_coarse;
  lay.fine_count = nf;
  lay.zero_cell = n_coarse + span_steps;

  const int cells = static_cast<int>(lay.edges.size()) - 1;
  lay.mids.resize(cells);
  lay.widths.resize(cells);
  for (int j = 0; j < cells; ++j) {
    lay.mids[j] = 0.5 * (lay.edges[j] + lay.edges[j + 1]);
    lay.widths[j] = lay.edges[j + 1] - lay.edges[j];
  }

  // First-order completion of the truncated kernel tails: beyond the edges
  // m(t,s) ~ prefactor * a * t * |s|^{a-1}, so the lost mass is a t-linear
  // Gaussian load with an explicit variance.
  const double a = model.alpha();
  const double p = model.m_prefactor * (opts.unit_variance ? 1.0 / std::sqrt(2.0 * model.c_h) : 1.0);
  const double rl = -lay.edges.front();
  const double rr = lay.edges.back();
  lay.tail_variance = p * p * a * a *
                      (std::pow(rl, 2.0 * a - 1.0) + std::pow(rr, 2.0 * a - 1.0)) /
                      (1.0 - 2.0 * a);
  return lay;
}

DriverSource::DriverSource(HurstModel model, TimeGrid grid, GeneratorMethod method,
                           int n_paths, GeneratorOptions opts)
    : model_(model), grid_(grid), method_(method), n_paths_(n_paths), opts_(opts) {
  if (n_paths_ < 1) throw ConfigError("driver needs at least one path");
  if (opts_.block_size < 2) opts_.block_size = 2;
  if (opts_.block_size % 2 != 0) ++opts_.block_size;  // circulant pairs stay in one block

  const int m = grid_.steps();
  const double us = opts_.unit_variance ? 1.0 / std::sqrt(2.0 * model_.c_h) : 1.0;

  if (method_ == GeneratorMethod::circulant) {
    const int M = 2 * m;
    std::vector<std::complex<double>> r(M);
    for (int j = 0; j < M; ++j) {
      const int lag = j <= m ? j : M - j;
      r[j] = fgn_cov_raw(model_, grid_.dt(), lag);
    }
    fft_inplace(r, false);
    auto scale = std::make_shared<std::vector<double>>(M);
    double lam_max = 0.0, lam_min = 0.0;
    for (int k = 0; k < M; ++k) {
      lam_max = std::max(lam_max, r[k].real());
      lam_min = std::min(lam_min, r[k].real());
    }
    if (lam_min < -1e-9 * lam_max)
      throw NumericError(
          "circulant embedding has a negative eigenvalue; double the grid resolution",
          lam_min);
    for (int k = 0; k < M; ++k)
      (*scale)[k] = us * std::sqrt(std::max(0.0, r[k].real()) / M);
    circulant_scale_ = std::move(scale);
  } else if (method_ == GeneratorMethod::cholesky) {
    if (m > 2048)
      throw ConfigError("cholesky generator is the O(n^3) oracle; use n <= 2^11 + 1 nodes");
    std::vector<double> cov(m);
    for (int k = 0; k < m; ++k) cov[k] = fgn_covariance(model_, grid_, k);
    auto L = std::make_shared<std::vector<double>>(static_cast<std::size_t>(m) * m, 0.0);
    auto at = [&](int i, int j) -> double& { return (*L)[static_cast<std::size_t>(i) * m + j]; };
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j <= i; ++j) {
        double s = cov[i - j];
        for (int k = 0; k < j; ++k) s -= at(i, k) * at(j, k);
        if (i == j) {
          if (s <= 0.0)
            throw NumericError("increment covariance numerically non-positive-definite", s);
          at(i, j) = std::sqrt(s);
        } else {
          at(i, j) = s / at(j, j);
        }
      }
    }
    if (us != 1.0)
      for (auto& v : *L) v *= us;
    chol_factor_ = std::move(L);
  } else {
    auto lay = std::make_shared<SynthesisLayout>(SynthesisLayout::build(model_, grid_, opts_));
    // spectrum of the lag kernel for the fine-region convolution
    const int nf = lay->fine_count;
    const int n = grid_.n;
    const double a = model_.alpha();
    const double dt = grid_.dt();
    const double off = static_cast<double>(lay->zero_cell - lay->fine_begin) + 0.5;
    conv_size_ = static_cast<int>(next_pow2(static_cast<std::size_t>(2 * nf + n)));
    auto ker = std::make_shared<std::vector<std::complex<double>>>(conv_size_);
    for (int q = 0; q < nf + n - 1; ++q) {
      const double lagv = (static_cast<double>(q - (nf - 1)) + off) * dt;
      (*ker)[q] = sgn_pow(lagv, a);
    }
    fft_inplace(*ker, false);
    fine_kernel_fft_ = std::move(ker);
    layout_ = std::move(lay);
  }
}

void DriverSource::fill_batch(std::int64_t first, std::int64_t end, PathBatch& batch) const {
  const int n = grid_.n;
  const int m = grid_.steps();
  const int count = static_cast<int>(end - first);
  const double us = opts_.unit_variance ? 1.0 / std::sqrt(2.0 * model_.c_h) : 1.0;
  batch.first_path = static_cast<int>(first);
  batch.count = count;
  batch.n = n;
  batch.bh.assign(static_cast<std::size_t>(count) * n, 0.0);
  const bool want_b = has_brownian();
  if (want_b) batch.b.assign(static_cast<std::size_t>(count) * n, 0.0);

  if (method_ == GeneratorMethod::circulant) {
    const int M = 2 * m;
    const auto& scale = *circulant_scale_;
    std::vector<std::complex<double>> buf(M);
    for (std::int64_t pair = first / 2; pair * 2 < end; ++pair) {
      CounterRng rng(opts_.seed, RngStream::driver, static_cast<std::uint64_t>(pair));
      for (int k = 0; k < M; ++k) {
        const double g0 = rng.normal();
        const double g1 = rng.normal();
        buf[k] = {scale[k] * g0, scale[k] * g1};
      }
      fft_inplace(buf, false);
      for (int half = 0; half < 2; ++half) {
        const std::int64_t p = 2 * pair + half;
        if (p < first || p >= end) continue;
        double* row = batch.bh.data() + static_cast<std::size_t>(p - first) * n;
        double acc = 0.0;
        for (int j = 0; j < m; ++j) {
          acc += half == 0 ? buf[j].real() : buf[j].imag();
          row[j + 1] = acc;
        }
      }
    }
  } else if (method_ == GeneratorMethod::cholesky) {
    Eigen::Map<const RowMat> L(chol_factor_->data(), m, m);
    RowMat Z(count, m);
    for (int i = 0; i < count; ++i) {
      CounterRng rng(opts_.seed, RngStream::driver, static_cast<std::uint64_t>(first + i));
      for (int j = 0; j < m; ++j) Z(i, j) = rng.normal();
    }
    RowMat fgn(count, m);
    fgn.noalias() = Z * L.transpose();
    for (int i = 0; i < count; ++i) {
      double* row = batch.bh.data() + static_cast<std::size_t>(i) * n;
      double acc = 0.0;
      for (int j = 0; j < m; ++j) {
        acc += fgn(i, j);
        row[j + 1] = acc;
      }
    }
  } else {
    const auto& lay = *layout_;
    const int cells = lay.cells();
    const int nf = lay.fine_count;
    const double a = model_.alpha();
    const double p = model_.m_prefactor * us;
    if (opts_.retain_spatial)
      batch.spatial.assign(static_cast<std::size_t>(count) * cells, 0.0);

    // coarse cells and the s-kernel weights are shared across the batch
    std::vector<int> coarse_idx;
    coarse_idx.reserve(cells - nf);
    for (int j = 0; j < cells; ++j)
      if (j < lay.fine_begin || j >= lay.fine_begin + nf) coarse_idx.push_back(j);
    const int mc = static_cast<int>(coarse_idx.size());
    RowMat Kc(n, mc);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < mc; ++j)
        Kc(i, j) = sgn_pow(grid_.t(i) - lay.mids[coarse_idx[j]], a);
    std::vector<double> u_mid(cells);
    for (int j = 0; j < cells; ++j) u_mid[j] = sgn_pow(lay.mids[j], a);
    std::vector<double> sqrt_width(cells);
    for (int j = 0; j < cells; ++j) sqrt_width[j] = std::sqrt(lay.widths[j]);

    std::vector<double> dw(cells);
    std::vector<std::complex<double>> conv(conv_size_);
    RowMat coarse_dw(count, mc);
    RowMat coarse_part(count, n);

    // pass 1: draw increments, fine convolution, scalar loads
    std::vector<double> xi0(count), xi_tail(count);
    for (int i = 0; i < count; ++i) {
      CounterRng rng(opts_.seed, RngStream::driver, static_cast<std::uint64_t>(first + i));
      double s0 = 0.0;
      for (int j = 0; j < cells; ++j) {
        dw[j] = rng.normal() * sqrt_width[j];
        s0 += u_mid[j] * dw[j];
      }
      xi0[i] = s0;
      xi_tail[i] = rng.normal() * std::sqrt(lay.tail_variance);
      for (int j = 0; j < mc; ++j) coarse_dw(i, j) = dw[coarse_idx[j]];
      if (opts_.retain_spatial)
        std::copy(dw.begin(), dw.end(),
                  batch.spatial.begin() + static_cast<std::size_t>(i) * cells);

      std::fill(conv.begin(), conv.end(), std::complex<double>(0.0, 0.0));
      for (int j = 0; j < nf; ++j) conv[j] = dw[lay.fine_begin + j];
      fft_inplace(conv, false);
      for (int k = 0; k < conv_size_; ++k) conv[k] *= (*fine_kernel_fft_)[k];
      fft_inplace(conv, true);

      double* row = batch.bh.data() + static_cast<std::size_t>(i) * n;
      for (int t = 0; t < n; ++t) row[t] = conv[t + nf - 1].real();

      double* brow = batch.b.data() + static_cast<std::size_t>(i) * n;
      double acc = 0.0;
      for (int t = 0; t < m; ++t) {
        acc += dw[lay.zero_cell + t];
        brow[t + 1] = acc;
      }
    }

    // pass 2: coarse contribution in one block product, then assemble
    coarse_part.noalias() = coarse_dw * Kc.transpose();
    for (int i = 0; i < count; ++i) {
      double* row = batch.bh.data() + static_cast<std::size_t>(i) * n;
      for (int t = 0; t < n; ++t)
        row[t] = p * (row[t] + coarse_part(i, t) + xi0[i]) + grid_.t(t) * xi_tail[i];
      row[0] = 0.0;  // the t = 0 kernel is identically zero
    }
  }

  if (want_b && method_ != GeneratorMethod::m_synthesis) {
    // independently sampled Brownian companion (uncoupled)
    const double sd = std::sqrt(grid_.dt());
    for (int i = 0; i < count; ++i) {
      CounterRng rng(opts_.seed, RngStream::brownian, static_cast<std::uint64_t>(first + i));
      double* row = batch.b.data() + static_cast<std::size_t>(i) * n;
      double acc = 0.0;
      for (int j = 0; j < m; ++j) {
        acc += rng.normal() * sd;
        row[j + 1] = acc;
      }
    }
  }
}

void DriverSource::for_each_batch(const std::function<void(const PathBatch&)>& fn) const {
  parallel_blocks(n_paths_, opts_.block_size, opts_.threads,
                  [&](std::int64_t, std::int64_t lo, std::int64_t hi) {
                    PathBatch batch;
                    fill_batch(lo, hi, batch);
                    fn(batch);
                  });
}

DriverEnsemble DriverSource::materialize() const {
  DriverEnsemble e;
  e.grid = grid_;
  e.hurst = model_;
  e.method = method_;
  e.seed = opts_.seed;
  e.coupled = coupled();
  e.has_brownian = has_brownian();
  e.n_paths = n_paths_;
  e.layout = layout_;
  e.options = opts_;
  e.bh.assign(static_cast<std::size_t>(n_paths_) * grid_.n, 0.0);
  if (e.has_brownian) e.b.assign(static_cast<std::size_t>(n_paths_) * grid_.n, 0.0);
  for_each_batch([&](const PathBatch& batch) {
    std::copy(batch.bh.begin(), batch.bh.end(),
              e.bh.begin() + static_cast<std::size_t>(batch.first_path) * grid_.n);
    if (e.has_brownian && !batch.b.empty())
      std::copy(batch.b.begin(), batch.b.end(),
                e.b.begin() + static_cast<std::size_t>(batch.first_path) * grid_.n);
  });
  return e;
}

DriverEnsemble generate_cholesky(const HurstModel& model, const TimeGrid& grid, int n_paths,
                                 const GeneratorOptions& opts) {
  return DriverSource(model, grid, GeneratorMethod::cholesky, n_paths, opts).materialize();
}

DriverEnsemble generate_circulant(const HurstModel& model, const TimeGrid& grid, int n_paths,
                                  const GeneratorOptions& opts) {
  return DriverSource(model, grid, GeneratorMethod::circulant, n_paths, opts).materialize();
}

DriverEnsemble generate_via_m(const HurstModel& model, const TimeGrid& grid, int n_paths,
                              const GeneratorOptions& opts) {
  return DriverSource(model, grid, GeneratorMethod::m_synthesis, n_paths, opts).materialize();
}

void write_ensemble_csv(std::ostream& out, const DriverEnsemble& e) {
  out.precision(17);
  out << "path,node,t,b,bh\n";
  for (int p = 0; p < e.n_paths; ++p) {
    const double* bh = e.bh_row(p);
    const double* b = e.has_brownian ? e.b_row(p) : nullptr;
    for (int i = 0; i < e.grid.n; ++i) {
      out << p << ',' << i << ',' << e.grid.t(i) << ',';
      if (b) out << b[i];
      out << ',' << bh[i] << '\n';
    }
  }
}

namespace {
struct BinaryHeader {
  char magic[4];
  std::uint8_t method;
  std::uint8_t flags;  // bit0: has B plane, bit1: coupled
  std::uint16_t n;
  std::uint32_t n_paths;
  float horizon;
  std::uint64_t seed;
  double hurst;
};
static_assert(sizeof(BinaryHeader) == 32, "ensemble binary header must be 32 bytes");
}  // namespace

void write_ensemble_binary(std::ostream& out, const DriverEnsemble& e) {
  if (e.grid.n > 0xFFFF) throw ConfigError("binary export supports up to 65535 nodes");
  BinaryHeader h{};
  std::memcpy(h.magic, "FWN1", 4);
  h.method = static_cast<std::uint8_t>(e.method);
  h.flags = static_cast<std::uint8_t>((e.has_brownian ? 1 : 0) | (e.coupled ? 2 : 0));
  h.n = static_cast<std::uint16_t>(e.grid.n);
  h.n_paths = static_cast<std::uint32_t>(e.n_paths);
  h.horizon = static_cast<float>(e.grid.horizon);
  h.seed = e.seed;
  h.hurst = e.hurst.h;
  out.write(reinterpret_cast<const char*>(&h), sizeof(h));
  out.write(reinterpret_cast<const char*>(e.bh.data()),
            static_cast<std::streamsize>(e.bh.size() * sizeof(double)));
  if (e.has_brownian)
    out.write(reinterpret_cast<const char*>(e.b.data()),
              static_cast<std::streamsize>(e.b.size() * sizeof(double)));
}

DriverEnsemble read_ensemble_binary(std::istream& in) {
  BinaryHeader h{};
  in.read(reinterpret_cast<char*>(&h), sizeof(h));
  if (!in || std::memcmp(h.magic, "FWN1", 4) != 0)
    throw ConfigError("not an FWN1 ensemble file");
  DriverEnsemble e;
  e.grid = TimeGrid::uniform(static_cast<double>(h.horizon), h.n);
  e.hurst = HurstModel::create(h.hurst);
  e.method = static_cast<GeneratorMethod>(h.method);
  e.seed = h.seed;
  e.has_brownian = h.flags & 1;
  e.coupled = h.flags & 2;
  e.n_paths = static_cast<int>(h.n_paths);
  e.bh.resize(static_cast<std::size_t>(e.n_paths) * e.grid.n);
  in.read(reinterpret_cast<char*>(e.bh.data()),
          static_cast<std::streamsize>(e.bh.size() * sizeof(double)));
  if (e.has_brownian) {
    e.b.resize(e.bh.size());
    in.read(reinterpret_cast<char*>(e.b.data()),
            static_cast<std::streamsize>(e.b.size() * sizeof(double)));
  }
  if (!in) throw ConfigError("truncated FWN1 ensemble file");
  return e;
}

}  // namespace fwn
