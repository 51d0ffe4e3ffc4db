#pragma once

// Portable seeded randomness.
//
// std::mt19937_64 has a fully specified output sequence, but the standard
// distributions and std::shuffle do not, so bounded draws, shuffles and
// Gaussian draws are implemented here on top of the raw engine output. This
// keeps every seeded artifact identical across standard library vendors.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace stereolab {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// 64-bit FNV-1a over raw bytes.
constexpr std::uint64_t fnv1a(std::string_view bytes,
                              std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Order-sensitive seed combiner. Strings are length-prefixed so that
/// ("ab","c") and ("a","bc") produce different streams.
class SeedHasher {
 public:
  explicit constexpr SeedHasher(std::uint64_t seed) noexcept : state_(mix64(seed)) {}

  constexpr SeedHasher& add(std::uint64_t v) noexcept {
    state_ = mix64(state_ ^ mix64(v + 0x632be59bd9b4e019ULL));
    return *this;
  }
  constexpr SeedHasher& add(std::string_view s) noexcept {
    add(static_cast<std::uint64_t>(s.size()));
    return add(fnv1a(s));
  }
  constexpr std::uint64_t value() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

/// Uniform integer in [0, bound) by rejection; bound must be > 0.
inline std::uint64_t uniform_below(Engine& engine, std::uint64_t bound) {
  // Largest multiple of bound representable; draws at or above it are rejected.
  const std::uint64_t limit = -bound % bound;  // (2^64 - bound) mod bound
  for (;;) {
    const std::uint64_t r = engine();
    if (r >= limit) return r % bound;
  }
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

/// Standard normal draw (Box-Muller, one value per call).
inline double standard_normal(Engine& engine) {
  double u1 = 0.0;
  do {
    u1 = uniform_unit(engine);
  } while (u1 <= 0.0);
  const double u2 = uniform_unit(engine);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Forward Fisher-Yates over the first `prefix` positions. The resulting
/// prefix equals the prefix of a full shuffle with the same engine state.
template <typename T>
void partial_shuffle(std::span<T> items, std::size_t prefix, Engine& engine) {
  const std::size_t n = items.size();
  if (prefix > n) prefix = n;
  for (std::size_t i = 0; i < prefix && i + 1 < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_below(engine, n - i));
    std::swap(items[i], items[j]);
  }
}

}  // namespace stereolab
