#pragma once

#include <cstdint>

namespace llql {

/// SplitMix64 finalizer; used to derive independent per-purpose seeds.
[[nodiscard]] constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kReplay = 2;
inline constexpr std::uint64_t kNoise = 3;
inline constexpr std::uint64_t kReset = 4;
inline constexpr std::uint64_t kPolicy = 5;
inline constexpr std::uint64_t kEval = 6;
}  // namespace stream

}  // namespace llql
