#include "olmpc/rng.h"

namespace olmpc {

std::uint64_t derive_seed(std::uint64_t seed, Stream stream,
                          std::uint64_t index) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ static_cast<std::uint64_t>(stream));
  return mix64(h ^ index);
}

std::mt19937_64 make_engine(std::uint64_t seed, Stream stream,
                            std::uint64_t index) {
  return std::mt19937_64(derive_seed(seed, stream, index));
}

}  // namespace olmpc
