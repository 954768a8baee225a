#pragma once

// Counter-based random numbers. Philox4x32-10 (Salmon et al., SC'11) keyed by
// a 64-bit seed; every stream is a pure function of (seed, stream id), so
// outputs are identical across platforms, compilers and thread counts.

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace dtscr {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter counter, Key key);
};

/// Mixes a base seed with an index (splitmix64 finalizer). Used to derive
/// per-replication and per-fold seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();
  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();
  /// Unbiased integer in [0, n).
  std::size_t index(std::size_t n);

 private:
  void refill();

  Philox4x32::Key key_;
  std::uint64_t block_ = 0;
  std::uint32_t stream_lo_;
  std::uint32_t stream_hi_;
  Philox4x32::Counter buffer_{};
  int position_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Fisher-Yates permutation of 0..n-1.
std::vector<int> random_permutation(int n, RandomStream& rng);

}  // namespace dtscr
