#pragma once

#include <cmath>
#include <cstdint>

namespace fwn {

/// Substream tags so independent purposes never share counter space.
enum class RngStream : std::uint64_t {
  driver = 0,        // spatial / increment noise
  brownian = 1,      // independently sampled B for exact generators
  initial = 2,       // SDE initial conditions Z
  tail = 3,          // tail-completion draws
};

/// Counter-based generator (Philox4x32-10). A draw is a pure function of
/// (seed, stream, path, counter), so any path is reproducible regardless of
/// how work is scheduled across threads.
class CounterRng {
public:
  CounterRng(std::uint64_t seed, RngStream stream, std::uint64_t path)
      : key0_(static_cast<std::uint32_t>(seed)),
        key1_(static_cast<std::uint32_t>(seed >> 32)),
        stream_lo_(static_cast<std::uint32_t>(path)),
        stream_hi_(static_cast<std::uint32_t>((path >> 32) ^
                   (static_cast<std::uint64_t>(stream) << 24))) {}

  /// Standard normal via Box-Muller; consumes exactly one counter block per
  /// pair so the draw schedule is fixed.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    std::uint32_t r[4];
    block(counter_++, r);
    const double u1 = to_unit(r[0], r[1]);
    const double u2 = to_unit(r[2], r[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  std::uint64_t next_u64() {
    std::uint32_t r[4];
    block(counter_++, r);
    return (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
  }

  void skip_to(std::uint64_t counter) {
    counter_ = counter;
    have_spare_ = false;
  }

private:
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;

  static double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t x = (static_cast<std::uint64_t>(hi) << 32) | lo;
    // (0,1]: never zero, so log() is safe.
    return (static_cast<double>(x >> 11) + 1.0) * 0x1.0p-53;
  }

  void block(std::uint64_t counter, std::uint32_t out[4]) const {
    std::uint32_t c0 = static_cast<std::uint32_t>(counter);
    std::uint32_t c1 = static_cast<std::uint32_t>(counter >> 32);
    std::uint32_t c2 = stream_lo_;
    std::uint32_t c3 = stream_hi_;
    std::uint32_t k0 = key0_, k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c0;
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c2;
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      const std::uint32_t n0 = hi1 ^ c1 ^ k0;
      const std::uint32_t n2 = hi0 ^ c3 ^ k1;
      c0 = n0;
      c1 = lo1;
      c2 = n2;
      c3 = lo0;
      k0 += kW0;
      k1 += kW1;
    }
    out[0] = c0;
    out[1] = c1;
    out[2] = c2;
    out[3] = c3;
  }

  std::uint32_t key0_, key1_, stream_lo_, stream_hi_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace fwn
