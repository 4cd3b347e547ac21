#pragma once

#include <cstdint>

#include "tailtree/normal.hpp"

namespace tailtree {

inline constexpr std::uint64_t kRngGamma = 0x9E3779B97F4A7C15ull;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Counter-based SplitMix64 stream. A stream is addressed by (seed, a, b, c);
/// draws are the SplitMix64 outputs of that key. Streams with distinct
/// addresses are independent, so per-(row, cell) generation is reproducible
/// regardless of evaluation order.
///
/// Stream address registry (a = purpose tag):
///   1: Markov-tree root draw           (b = row, c = root node)
///   2: Markov-tree edge conditional    (b = row, c = edge index)
///   3: observation noise               (b = row, c = column)
///   4: tail-tree increments            (b = row, c = edge index)
///   5: bootstrap resampling            (b = replicate)
///   6: beta-copula sampling            (b = row)
///   7: mvn lattice shifts              (b = shift index)
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t a = 0,
                     std::uint64_t b = 0, std::uint64_t c = 0)
      : key_(mix64(mix64(mix64(mix64(seed + kRngGamma) + a) + b) + c)) {}

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kRngGamma); }

  /// Uniform draw on the open interval (0,1) with 53-bit resolution.
  double next_unit_open() {
    for (;;) {
      const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
      if (u > 0.0) return u;  // (x >> 11) * 2^-53 < 1 already
    }
  }

  /// Standard normal draw via the quantile transform.
  double next_normal() { return norm_quantile(next_unit_open()); }

  /// Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) {
    // multiply-shift; bias is < n / 2^64 and irrelevant at our scales
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

namespace rng_purpose {
inline constexpr std::uint64_t kMarkovRoot = 1;
inline constexpr std::uint64_t kMarkovEdge = 2;
inline constexpr std::uint64_t kNoise = 3;
inline constexpr std::uint64_t kTailTree = 4;
inline constexpr std::uint64_t kBootstrap = 5;
inline constexpr std::uint64_t kBetaCopula = 6;
inline constexpr std::uint64_t kMvnShift = 7;
}  // namespace rng_purpose

}  // namespace tailtree
