#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace grl {

using Rng = std::mt19937_64;

// Deterministic child seed from a root seed, a component name and indices.
// Every random stream in the toolkit is obtained this way so that partial
// reruns reproduce exactly.
std::uint64_t derive_seed(std::uint64_t root, std::string_view name,
                          std::uint64_t index = 0, std::uint64_t index2 = 0);

inline Rng make_rng(std::uint64_t root, std::string_view name,
                    std::uint64_t index = 0, std::uint64_t index2 = 0) {
  return Rng(derive_seed(root, name, index, index2));
}

// Uniform double in [0, 1) using the top 53 bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng);
}

}  // namespace grl
