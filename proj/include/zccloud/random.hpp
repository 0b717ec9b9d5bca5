#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace zcc {

// Sampling helpers built directly on std::mt19937_64; the engine's output is
// fully specified by the standard, the std:: distributions are not, and
// generated data must be bit-identical across toolchains.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Open interval (0, 1).
inline double to_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

// Counter-based stream: value depends only on (seed, stream, index).
inline double hashed_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return to_unit(splitmix64(splitmix64(seed ^ (stream * 0xd1b54a32d192ed03ULL)) + index));
}

inline double hashed_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const double u1 = hashed_uniform(seed, stream, 2 * index);
  const double u2 = hashed_uniform(seed, stream, 2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  double uniform() { return to_unit(engine_()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double exponential(double mean) { return -mean * std::log(uniform()); }

  // Index in [0, n).
  std::uint64_t index(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

// Log-normal parameters of the underlying normal, by moment matching.
struct LogNormalParams {
  double mu = 0.0;
  double sigma = 0.0;

  static LogNormalParams from_moments(double mean, double stdev) {
    const double cv = stdev / mean;
    const double s2 = std::log1p(cv * cv);
    return {std::log(mean) - 0.5 * s2, std::sqrt(s2)};
  }

  double sample(double standard_normal) const { return std::exp(mu + sigma * standard_normal); }
};

}  // namespace zcc
