#pragma once

#include <array>
#include <cstdint>

namespace etest {

/// SplitMix64 finalizer. Used for seed expansion and for deriving child seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of the child stream `index` of `master`. Depends only on the pair, so
/// trial i gets the same stream regardless of scheduling order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(mix64(master) ^ mix64(index + 0xD1B54A32D192ED03ULL));
}

/// xoshiro256** seeded through SplitMix64.
///
/// All sampling routines below are implemented here (not via <random>
/// distributions) so that streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept;

  static Rng child(std::uint64_t master, std::uint64_t index) noexcept {
    return Rng(derive_seed(master, index));
  }

  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() noexcept;

  /// Uniform integer in [lo, hi] (inclusive).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept;

  /// Binomial(n, p). Inversion for n <= 64; larger n is drawn as a sum of
  /// Binomial(64, p) blocks plus a remainder block, which is exact.
  std::uint64_t binomial(std::uint64_t n, double p) noexcept;

  /// Poisson(mean). Inversion for mean < 10, Hormann's PTRS otherwise.
  std::uint64_t poisson(double mean) noexcept;

 private:
  std::uint64_t binomial_small(std::uint64_t n, double p) noexcept;

  std::array<std::uint64_t, 4> s_{};
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace etest
