#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace madi {

/// SplitMix64 run as a counter-based generator: the k-th output of a stream
/// is mix(key + k * golden_gamma), so a stream is fully determined by its key
/// and position. Keys for independent streams come from `derive_stream`, which
/// hashes a master seed together with a path of integers (e.g. design, n,
/// replicate) so results never depend on execution order or thread count.
///
/// Satisfies UniformRandomBitGenerator, but the library only draws through
/// the helpers below; std distributions are implementation-defined and would
/// break cross-platform reproducibility.
class CounterRng {
public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return mix(key_ + (++counter_) * kGamma); }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t position() const noexcept { return counter_; }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() noexcept;
  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }
  /// Unbiased uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;
  /// Standard normal via Box-Muller (no cached second variate).
  double normal() noexcept;
  /// Exponential with rate 1.
  double exponential() noexcept;

  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
  static std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Key for the stream identified by (master_seed, path...).
std::uint64_t derive_key(std::uint64_t master_seed, std::initializer_list<std::uint64_t> path) noexcept;

inline CounterRng derive_stream(std::uint64_t master_seed, std::initializer_list<std::uint64_t> path) noexcept {
  return CounterRng(derive_key(master_seed, path));
}

}  // namespace madi
