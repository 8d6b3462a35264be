#ifndef FUNCTREE_RANDOM_H_
#define FUNCTREE_RANDOM_H_

#include <cstdint>
#include <random>

namespace functree {

// splitmix64 finalizer; used to derive independent child seeds from one
// master seed so every consumer of randomness is reproducible.
inline std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

inline Rng MakeRng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(MixSeed(seed, stream));
}

}  // namespace functree

#endif  // FUNCTREE_RANDOM_H_
