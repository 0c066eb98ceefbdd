#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

#include "guot/linalg.hpp"

namespace guot::rng {

/// SplitMix64 finalizer; a full-period bijection on 64-bit integers.
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stateless mix of (seed, stream, slot); distinct triples give independent
/// outputs, so draws can be evaluated in any order.
inline std::uint64_t mix(std::uint64_t seed, std::uint64_t stream, std::uint64_t slot) {
  std::uint64_t z = splitmix64(seed);
  z = splitmix64(z ^ (stream * 0xda942042e4dd58b5ULL));
  z = splitmix64(z ^ (slot * 0x2545f4914f6cdd1dULL));
  return z;
}

/// Uniform draw in (0, 1]; the half-open side keeps log(u) finite.
inline double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t slot) {
  return static_cast<double>((mix(seed, stream, slot) >> 11) + 1) * 0x1.0p-53;
}

/// Box-Muller pair from slots (2k, 2k + 1) of the given stream.
inline std::pair<double, double> normal_pair(std::uint64_t seed, std::uint64_t stream,
                                             std::uint64_t k) {
  const double u1 = uniform01(seed, stream, 2 * k);
  const double u2 = uniform01(seed, stream, 2 * k + 1);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(theta), r * std::sin(theta)};
}

/// d independent standard normal coordinates for one sample stream.
inline Vector standard_normal(std::uint64_t seed, std::uint64_t stream, Eigen::Index d) {
  Vector z(d);
  for (Eigen::Index j = 0; j < d; j += 2) {
    auto [z0, z1] = normal_pair(seed, stream, static_cast<std::uint64_t>(j / 2));
    z(j) = z0;
    if (j + 1 < d) z(j + 1) = z1;
  }
  return z;
}

}  // namespace guot::rng
