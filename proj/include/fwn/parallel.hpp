#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace fwn {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Runs fn(block_index, begin, end) over [0,n) in fixed blocks. Blocks are
/// claimed from an atomic counter, so any result a block produces must be
/// stored by block index; combined with fixed-order reduction below, results
/// do not depend on the number of workers.
template <class Fn>
void parallel_blocks(std::int64_t n, std::int64_t block_size, int threads, Fn&& fn) {
  if (n <= 0) return;
  const std::int64_t n_blocks = (n + block_size - 1) / block_size;
  threads = std::min<std::int64_t>(resolve_threads(threads), n_blocks);
  if (threads <= 1) {
    for (std::int64_t b = 0; b < n_blocks; ++b)
      fn(b, b * block_size, std::min(n, (b + 1) * block_size));
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::int64_t b = next.fetch_add(1);
        if (b >= n_blocks || failed.load()) return;
        try {
          fn(b, b * block_size, std::min(n, (b + 1) * block_size));
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failed.load()) std::rethrow_exception(error);
}

/// Fixed-order pairwise summation tree; the result depends only on the input
/// order, never on how many workers produced the terms.
inline double pairwise_sum(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::size_t n = v.size();
  while (n > 1) {
    std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < n / 2; ++i) v[i] = v[2 * i] + v[2 * i + 1];
    if (n % 2 == 1) v[n / 2] = v[n - 1];
    n = half;
  }
  return v[0];
}

/// Accumulates raw power sums of one statistic per sample. Per-block
/// instances are merged with the pairwise tree.
struct MomentSums {
  static constexpr int kMax = 8;
  std::int64_t n = 0;
  double s[kMax] = {0, 0, 0, 0, 0, 0, 0, 0};

  void add(double x) {
    ++n;
    double p = x;
    for (int k = 0; k < kMax; ++k) {
      s[k] += p;
      p *= x;
    }
  }

  double mean() const { return s[0] / static_cast<double>(n); }
  double raw(int k) const { return s[k - 1] / static_cast<double>(n); }

  // central moments via raw-moment expansion
  double variance() const {
    const double m = mean();
    return raw(2) - m * m;
  }
  double central(int k) const;

  double se_mean() const { return std::sqrt(variance() / static_cast<double>(n)); }
  double se_variance() const {
    const double v = variance();
    return std::sqrt(std::max(0.0, central(4) - v * v) / static_cast<double>(n));
  }
  // standard error of the sample fourth central moment (delta method,
  // leading term)
  double se_central4() const {
    const double m4 = central(4);
    return std::sqrt(std::max(0.0, central(8) - m4 * m4) / static_cast<double>(n));
  }
};

inline double MomentSums::central(int k) const {
  const double m = mean();
  // binomial expansion sum_{j} C(k,j) raw(j) (-m)^{k-j}
  static const double binom[9][9] = {
      {1, 0, 0, 0, 0, 0, 0, 0, 0},         {1, 1, 0, 0, 0, 0, 0, 0, 0},
      {1, 2, 1, 0, 0, 0, 0, 0, 0},         {1, 3, 3, 1, 0, 0, 0, 0, 0},
      {1, 4, 6, 4, 1, 0, 0, 0, 0},         {1, 5, 10, 10, 5, 1, 0, 0, 0},
      {1, 6, 15, 20, 15, 6, 1, 0, 0},      {1, 7, 21, 35, 35, 21, 7, 1, 0},
      {1, 8, 28, 56, 70, 56, 28, 8, 1}};
  double acc = 0.0;
  double mp = 1.0;  // (-m)^{k-j} built from j=k downwards
  for (int j = k; j >= 0; --j) {
    const double rj = (j == 0) ? 1.0 : raw(j);
    acc += binom[k][j] * rj * mp;
    mp *= -m;
  }
  return acc;
}

inline MomentSums merge_moments(const std::vector<MomentSums>& blocks) {
  // pairwise tree per component for worker-count independence
  MomentSums out;
  for (int k = 0; k < MomentSums::kMax; ++k) {
    std::vector<double> comp(blocks.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) comp[i] = blocks[i].s[k];
    out.s[k] = pairwise_sum(std::move(comp));
  }
  for (const auto& b : blocks) out.n += b.n;
  return out;
}

/// Pairwise-merges per-block vectors of partial sums (e.g. per-node sums).
inline std::vector<double> merge_vectors(const std::vector<std::vector<double>>& blocks) {
  if (blocks.empty()) return {};
  const std::size_t m = blocks.front().size();
  std::vector<double> out(m);
  std::vector<double> comp(blocks.size());
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < blocks.size(); ++i) comp[i] = blocks[i][j];
    out[j] = pairwise_sum(comp);
  }
  return out;
}

}  // namespace fwn
