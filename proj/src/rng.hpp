#pragma once

#include <cstdint>

namespace cobras {

// Independent sub-streams derived from one master seed.
enum class Stream : std::uint64_t {
  KMeans = 0x6b6d65616e73ULL,
  HalfChoice = 0x68616c66ULL,
  Folds = 0x666f6c6473ULL,
  Cell = 0x63656c6cULL,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, Stream stream,
                                 std::uint64_t counter) {
  return splitmix64(splitmix64(master ^ static_cast<std::uint64_t>(stream)) +
                    counter);
}

// Portable uniform double in [0, 1) from a 64-bit draw.
inline double unit_interval(std::uint64_t draw) {
  return static_cast<double>(draw >> 11) * 0x1.0p-53;
}

}  // namespace cobras
