#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace insindy {

/// SplitMix64 finalizer. Also used to derive sub-seeds.
constexpr std::uint64_t mix64(std::uint64_t z)
{
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based stream: draw k is mix64(seed + (k + 1) * golden_gamma), i.e.
/// the SplitMix64 sequence. Uniforms take the top 53 bits; normals use the
/// Box-Muller cosine branch on two consecutive uniforms (one normal per pair).
/// The layout is simple enough to replicate bit-for-bit in other languages.
class CounterRng
{
public:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  explicit CounterRng(std::uint64_t seed, std::uint64_t counter = 0) : seed_(seed), counter_(counter) {}

  std::uint64_t next() { return mix64(seed_ + (++counter_) * kGamma); }

  /// Uniform on [0, 1).
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal()
  {
    double const u1 = 1.0 - uniform(); // (0, 1]
    double const u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t counter() const { return counter_; }

private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

} // namespace insindy
