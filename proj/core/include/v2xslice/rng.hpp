#ifndef V2XSLICE_RNG_HPP_
#define V2XSLICE_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <string_view>

namespace v2xslice {

// splitmix64 finalizer; bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Derives an independent seed for a named component from a master seed.
///
/// seed = mix64(master ^ mix64(fnv1a(name))), then each extra index is folded
/// in with another mix64 round. Adding a new component name never changes the
/// seeds of existing components.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view name,
                                    std::initializer_list<std::uint64_t> indices = {}) noexcept {
  std::uint64_t s = mix64(master ^ mix64(fnv1a(name)));
  for (std::uint64_t i : indices) s = mix64(s ^ mix64(i + 0x632BE59BD9B4E019ULL));
  return s;
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) { return Engine(seed); }

// The helpers below avoid std::*_distribution so that streams are identical
// across standard library implementations.

inline double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Uniform in [0, 1).
inline double uniform01(Engine& eng) { return to_unit(eng()); }

/// Uniform integer in [0, n). Lemire's nearly-divisionless rejection.
inline std::uint64_t uniform_index(Engine& eng, std::uint64_t n) {
  if (n <= 1) return 0;
  __uint128_t m = static_cast<__uint128_t>(eng()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<__uint128_t>(eng()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

/// Uniform integer in [lo, hi].
inline std::int64_t uniform_int(Engine& eng, std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(uniform_index(eng, static_cast<std::uint64_t>(hi - lo) + 1));
}

inline bool bernoulli(Engine& eng, double p) { return uniform01(eng) < p; }

/// Stateless counter-based stream: every draw is a pure function of
/// (key, counter words). Used where draws must be independent per
/// (link, subchannel, slot) regardless of evaluation order.
class CounterRng {
 public:
  constexpr explicit CounterRng(std::uint64_t key = 0) noexcept : key_(key) {}

  constexpr std::uint64_t key() const noexcept { return key_; }

  constexpr std::uint64_t bits(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                               std::uint64_t d = 0) const noexcept {
    std::uint64_t h = mix64(key_ ^ a);
    h = mix64(h ^ (b + 0x94D049BB133111EBULL));
    h = mix64(h ^ (c + 0xBF58476D1CE4E5B9ULL));
    return mix64(h ^ (d + 0x2545F4914F6CDD1DULL));
  }

  /// Uniform in (0, 1).
  double uniform(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                 std::uint64_t d = 0) const noexcept {
    return (static_cast<double>(bits(a, b, c, d) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// A pair of independent standard normals (Box-Muller).
  std::pair<double, double> normal_pair(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                                        std::uint64_t d = 0) const noexcept {
    const double u1 = uniform(a, b, c, d);
    const double u2 = uniform(a, b, c, d ^ 0xA5A5A5A5A5A5A5A5ULL);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(phi), r * std::sin(phi)};
  }

  double normal(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                std::uint64_t d = 0) const noexcept {
    return normal_pair(a, b, c, d).first;
  }

  /// Unit-mean exponential.
  double exponential(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                     std::uint64_t d = 0) const noexcept {
    return -std::log(uniform(a, b, c, d));
  }

 private:
  std::uint64_t key_;
};

}  // namespace v2xslice

#endif  // V2XSLICE_RNG_HPP_
