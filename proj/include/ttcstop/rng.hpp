#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace ttcstop {

/// Counter-based generator: every draw is a pure function of (seed, key...),
/// hashed with the SplitMix64 finalizer. Draws can be made in any order or in
/// parallel and still reproduce bit for bit.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t bits(std::initializer_list<std::uint64_t> key) const {
    std::uint64_t h = mix(seed_);
    for (std::uint64_t k : key) h = mix(h ^ mix(k));
    return h;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform(std::initializer_list<std::uint64_t> key) const {
    return static_cast<double>(bits(key) >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller on two derived uniforms.
  double normal(std::uint64_t a, std::uint64_t b = 0) const {
    const double u1 = 1.0 - uniform({a, b, 0});  // (0, 1]
    const double u2 = uniform({a, b, 1});
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t seed_;
};

}  // namespace ttcstop
