#pragma once

#include <cstdint>
#include <random>

namespace stokes {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based seed splitting: the derived seed depends only on
/// (root, stream, counter), never on the order in which streams are requested.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream,
                                 std::uint64_t counter = 0) {
  return splitmix64(splitmix64(splitmix64(root) ^ stream) ^ (counter * 0xd1b54a32d192ed03ULL));
}

namespace streams {
inline constexpr std::uint64_t positions = 0x706f73;
inline constexpr std::uint64_t photons = 0x70686f;
inline constexpr std::uint64_t motion = 0x6d6f74;
inline constexpr std::uint64_t oracle = 0x6f7263;
inline constexpr std::uint64_t sweep = 0x737770;
}  // namespace streams

}  // namespace stokes
