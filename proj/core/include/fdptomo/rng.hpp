#pragma once

#include <cstdint>
#include <random>

namespace fdptomo {

using Engine = std::mt19937_64;

/// Stream tags keep independent consumers of one master seed apart.
enum class Stream : std::uint64_t {
  signal = 1,
  blocked = 2,
  probe = 3,
  state = 4,
  monte_carlo = 5,
  solver = 6,
};

/// SplitMix64 finaliser; a bijective avalanche mix of one 64-bit word.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for sub-stream (stream, index) of a master seed. Chunked parallel
/// work seeds each chunk from its index, so results never depend on how
/// chunks are scheduled.
constexpr std::uint64_t derive_seed(std::uint64_t master, Stream stream,
                                    std::uint64_t index = 0) {
  return mix64(mix64(master ^ mix64(static_cast<std::uint64_t>(stream))) + index);
}

/// Uniform double in the open interval (0, 1) from the top 53 bits.
inline double uniform_open(Engine& engine) {
  return (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace fdptomo
