#pragma once

// Counter-based random streams. A stream is a pure function of its key and
// position, so any sample's noise can be regenerated without replaying the
// samples before it.

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace reactive::rng {

/// SplitMix64 output function (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// Folds a path of integers into a key: derive_key(seed, {state, sample, sensor}).
constexpr std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t k = mix64(seed + kGolden);
  for (std::uint64_t p : path) {
    k = mix64(k ^ mix64(p + kGolden));
  }
  return k;
}

/// UniformRandomBitGenerator whose n-th output is mix64(key + (n + 1) * golden).
class CounterStream {
public:
  using result_type = std::uint64_t;

  constexpr explicit CounterStream(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
  }

  constexpr std::uint64_t key() const { return key_; }
  constexpr std::uint64_t position() const { return counter_; }

  /// Uniform double in [0, 1) from the top 53 bits.
  constexpr double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace reactive::rng
