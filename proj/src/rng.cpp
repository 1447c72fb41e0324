#include "mpfusion/rng.hpp"

namespace mpfusion {

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::string_view label) {
  const std::uint64_t a = mix64(master);
  const std::uint64_t b = mix64(a ^ (index + 0x9e3779b97f4a7c15ULL));
  return mix64(b ^ fnv1a64(label));
}

}  // namespace mpfusion
