#pragma once

#include <cstdint>
#include <limits>
#include <span>

namespace advdist {

/// SplitMix64 finalizer. Bijective on 64-bit words.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// FNV-1a over raw bytes; stable across platforms of the same endianness.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;
std::uint64_t fnv1a64_doubles(std::span<const double> values) noexcept;

/// Counter-based stream: draw k (k = 1, 2, ...) returns
///   splitmix64(key + k * 0x9e3779b97f4a7c15),
/// where key = splitmix64(seed ^ splitmix64(stream)). Every (seed, stream)
/// pair is an independent reproducible sequence, so sample i can be
/// regenerated without touching samples 0..i-1.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;

  std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace advdist
