#pragma once

#include <cstdint>
#include <random>

namespace jumpex {

// Stream-splitting rule used everywhere in this project:
//
//   engine(master, stream, purpose) = mt19937_64 seeded with
//       mix(mix(mix(master), stream), purpose)
//
// where mix() is one SplitMix64 scrambling round.  `stream` is the path
// index for Monte Carlo loops and `purpose` separates noise consumers
// (see the `purpose` namespace below), so every path owns an independent
// generator and results are reproducible bit-for-bit for a fixed master
// seed, independent of scheduling.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t h, std::uint64_t word) {
  return splitmix64(h ^ (word * 0xff51afd7ed558ccdULL + 0x2545f4914f6cdd1dULL));
}

namespace purpose {
inline constexpr std::uint64_t discrete_scenario = 1;
inline constexpr std::uint64_t integrator_law = 2;
inline constexpr std::uint64_t exploratory = 3;
inline constexpr std::uint64_t explicit_wealth = 4;
inline constexpr std::uint64_t feynman_kac = 5;
inline constexpr std::uint64_t jump_sampling = 6;
inline constexpr std::uint64_t synthetic = 7;
}  // namespace purpose

inline std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t stream,
                                   std::uint64_t tag = 0) {
  return std::mt19937_64(mix_seed(mix_seed(splitmix64(master), stream), tag));
}

}  // namespace jumpex
