#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mvrank {

// Identifier written to every results file so runs can be matched to the
// generator that produced them.
inline constexpr std::string_view kRngAlgorithm = "mt19937_64+splitmix64-split";

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Derives an independent child seed for stream `index` of `seed`
// (repetition number, sample role, ...).
constexpr std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(seed ^ mix64(index + 0x632BE59BD9B4E019ULL));
}

// Seeded generator with the variate transforms used by the samplers.
// Distributions are implemented here rather than taken from <random> so the
// output does not depend on the standard library vendor.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1); never returns an endpoint.
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller. Values are produced in pairs; the second
  // one is cached for the next call.
  double normal();

  // Gamma(shape, 1) via Marsaglia-Tsang, with the U^(1/shape) boost for
  // shape < 1.
  double gamma(double shape);

  // Beta(a, b) as G1 / (G1 + G2).
  double beta(double a, double b);

  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace mvrank
