#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace astra {

// splitmix64 finalizer; used to derive independent stream seeds from a
// (master seed, stream index) pair so results do not depend on which worker
// executes which index.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::mt19937_64 derived_rng(std::uint64_t master_seed, std::uint64_t stream_index) {
  std::uint64_t s = mix64(master_seed ^ mix64(stream_index));
  return std::mt19937_64(s);
}

// Fresh distribution objects per call: normal_distribution caches a spare
// variate, and carrying that cache across different streams would make
// results depend on which worker ran which index.
inline double standard_normal(std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

inline double uniform01(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

// Gamma(shape, 1) via Marsaglia-Tsang squeeze. Shapes below one are handled
// with the shape+1 boost G(a) = G(a+1) * U^(1/a), which is exact and stays
// accurate for the tiny shapes produced by steep Pareto targets.
inline double gamma_draw(std::mt19937_64& rng, double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("gamma_draw: shape must be positive");
  if (shape < 1.0) {
    // log-space boost to dodge underflow of U^(1/a) for a << 1
    double g = gamma_draw(rng, shape + 1.0);
    double u = uniform01(rng);
    while (u <= 0.0) u = uniform01(rng);
    return g * std::exp(std::log(u) / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = standard_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    double u = uniform01(rng);
    double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace astra
