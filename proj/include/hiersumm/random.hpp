#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>

#include "hiersumm/errors.hpp"

namespace hiersumm {

/// SplitMix64 finalizer. Used to derive independent stream seeds from
/// (seed, stream index) pairs.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

/// Source of uniform draws consumed by the interleaver. Production code uses
/// Rng; tests substitute a scripted sequence.
class RandomSource {
 public:
  virtual ~RandomSource() = default;

  /// Uniform integer in [lo, hi], both inclusive.
  virtual std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) = 0;

  /// Index i drawn with probability counts[i] / sum(counts).
  virtual std::size_t choose_weighted(std::span<const std::size_t> counts) {
    std::size_t total = 0;
    for (auto c : counts) total += c;
    if (total == 0) throw InvalidInput("choose_weighted: all counts are zero");
    auto u = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(total) - 1));
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (u < counts[i]) return i;
      u -= counts[i];
    }
    return counts.size() - 1;  // unreachable
  }
};

/// The library's reproducible generator: std::mt19937_64 (exactly specified
/// by the standard) with hand-written distributions, so a seed yields the
/// same stream on every conforming toolchain.
///
///   uniform_int  rejection sampling on the 64-bit output (no modulo bias)
///   uniform01    top 53 bits / 2^53
///   normal       Box-Muller, one value per pair of uniforms
class Rng final : public RandomSource {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) override {
    if (hi < lo) {
      throw InvalidInput("uniform_int: empty range [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "]");
    }
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(engine_());  // full 64-bit range
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
  }

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal(double mean, double stdev) {
    double u1;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    return mean + stdev * std::sqrt(-2.0 * std::log(u1)) *
                      std::cos(2.0 * std::numbers::pi * u2);
  }

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hiersumm
