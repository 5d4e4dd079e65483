#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace l1tik {

// All randomness in the library comes from std::mt19937_64, whose output
// sequence is fixed by the standard. The standard distributions are not
// portable across library implementations, so the conversions below are
// done by hand on the raw 64-bit stream.
using Engine = std::mt19937_64;

/// Uniform integer in [0, bound) by rejection; consumes one or more draws.
inline std::uint64_t uniform_below(Engine& engine, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = engine();
  } while (x >= limit);
  return x % bound;
}

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

/// Fair sign from the top bit of one draw.
inline double random_sign(Engine& engine) { return (engine() >> 63) ? 1.0 : -1.0; }

/// Box-Muller pair from two draws.
inline void standard_normal_pair(Engine& engine, double& z0, double& z1) {
  const double u1 = 1.0 - uniform01(engine);  // (0, 1]
  const double u2 = uniform01(engine);
  const double r = std::sqrt(-2.0 * std::log(u1));
  z0 = r * std::cos(2.0 * std::numbers::pi * u2);
  z1 = r * std::sin(2.0 * std::numbers::pi * u2);
}

/// SplitMix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for trial `trial` of sweep level `level`:
///   splitmix64(splitmix64((level << 32) | trial) ^ master).
/// Distinct (level, trial) pairs below 2^32 give distinct seeds because both
/// the packing and splitmix64 are injective.
constexpr std::uint64_t split_seed(std::uint64_t master, std::uint32_t level,
                                   std::uint32_t trial) {
  const std::uint64_t packed = (static_cast<std::uint64_t>(level) << 32) | trial;
  return splitmix64(splitmix64(packed) ^ master);
}

}  // namespace l1tik
