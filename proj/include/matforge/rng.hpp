#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "matforge/common.hpp"

namespace matforge::rng {

// Counter-based generator built on the splitmix64 finalizer. Output depends
// only on (key, counter), so independent streams never interact and any
// member of a stream can be regenerated in isolation. Constants:
//   gamma = 0x9E3779B97F4A7C15, m1 = 0xBF58476D1CE4E5B9, m2 = 0x94D049BB133111EB.
inline uint64_t at(uint64_t key, uint64_t counter) {
  uint64_t z = key + (counter + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Uniform on the open interval (0, 1); safe under log().
inline double uniform(uint64_t key, uint64_t counter) {
  return (static_cast<double>(at(key, counter) >> 11) + 0.5) * 0x1.0p-53;
}

// Box-Muller: one normal draw consumes counters (2n, 2n+1).
inline double normal(uint64_t key, uint64_t n) {
  double u1 = uniform(key, 2 * n);
  double u2 = uniform(key, 2 * n + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

inline uint64_t key_from(const std::string& tag, uint64_t seed) {
  return fnv1a64(tag + ":" + std::to_string(seed));
}

// Shared-per-workflow unit normals that keep ensemble members aligned across
// systems: member m uses the same draw in every evaluation under one seed.
inline double ensemble_z(uint64_t workflow_seed, uint64_t member) {
  return normal(key_from("ensemble", workflow_seed), member);
}

}  // namespace matforge::rng
