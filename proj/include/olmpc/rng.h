#pragma once

#include <cstdint>
#include <random>

namespace olmpc {

/// Independent random streams. Every draw in the library is a pure function
/// of (seed, stream, index), so reordering work never changes results.
enum class Stream : std::uint64_t {
  kSystem = 1,
  kCost = 2,
  kExploration = 3,
  kObservation = 4,
  kRestart = 5,
  kSampling = 6,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, Stream stream,
                          std::uint64_t index);

std::mt19937_64 make_engine(std::uint64_t seed, Stream stream,
                            std::uint64_t index);

}  // namespace olmpc
