#pragma once

#include <cstdint>

namespace sphereflow {

// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Independent child seed number `stream` of `root`. Every stochastic piece of
// a run (replicates, committee members, per-component M-steps) draws its
// generator seed through this, so results depend only on the root seed.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  return mix64(root + 0x9E3779B97F4A7C15ULL * (stream + 1));
}

}  // namespace sphereflow
