#ifndef MPFUSION_RNG_HPP
#define MPFUSION_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace mpfusion {

// Seeded random stream. Each filter cloud, trajectory and realization owns
// exactly one of these; nothing in the library touches global randomness.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z);

// 64-bit FNV-1a over the bytes of `text`.
std::uint64_t fnv1a64(std::string_view text);

// Stable counter-based seed derivation:
//
//   derive_seed(m, i, L) = mix64(mix64(mix64(m) ^ (i + 0x9e3779b97f4a7c15)) ^ fnv1a64(L))
//
// Only integer arithmetic modulo 2^64, so the value is identical on every
// platform. Distinct (index, label) pairs give unrelated streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::string_view label);

}  // namespace mpfusion

#endif  // MPFUSION_RNG_HPP
