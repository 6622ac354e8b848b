#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace resp {

/// splitmix64 finalizer.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Child seed = mix64(FNV-1a over [master as 8 LE bytes, 0, phase, 0, key]).
/// The byte layout is fixed so derived seeds are stable across versions
/// and platforms.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view phase,
                                 std::string_view key = {}) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](unsigned char b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  };
  for (int i = 0; i < 8; ++i) feed(static_cast<unsigned char>(master >> (8 * i)));
  feed(0);
  for (char c : phase) feed(static_cast<unsigned char>(c));
  feed(0);
  for (char c : key) feed(static_cast<unsigned char>(c));
  return mix64(h);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

/// Uniform double in [0, 1) from the top 53 bits; independent of the
/// standard library's distribution implementations.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Uniform integer in [0, n). n must be > 0.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  // Lemire-style rejection keeps this unbiased and portable.
  const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

/// Fisher-Yates with uniform_index, so shuffles are identical across
/// standard-library implementations.
template <class Vec>
void shuffle(Vec& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

/// Standard normal via Box-Muller (one value per call).
inline double gaussian(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

/// Gamma(shape, 1) by Marsaglia-Tsang; shape < 1 uses the power boost.
inline double gamma_sample(Rng& rng, double shape) {
  if (shape < 1.0) {
    double u = uniform01(rng);
    while (u <= 0.0) u = uniform01(rng);
    return gamma_sample(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = gaussian(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01(rng);
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

inline double beta_sample(Rng& rng, double a, double b) {
  const double x = gamma_sample(rng, a);
  const double y = gamma_sample(rng, b);
  return (x + y) > 0.0 ? x / (x + y) : 0.5;
}

}  // namespace resp
