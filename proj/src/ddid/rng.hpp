#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <string_view>

namespace ddid::rng {

// Identity of the generator, recorded in every seeded output.
inline constexpr std::string_view kGeneratorName = "splitmix64-counter/v1";

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// Derives an independent stream key from a seed and a path of stream ids,
// e.g. {replicate, unit}. Distinct paths give unrelated streams.
inline std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t k = mix64(seed + kGolden);
  std::uint64_t depth = 1;
  for (std::uint64_t p : path) k = mix64(k ^ mix64(p * kGolden + depth++));
  return k;
}

// Counter-based generator: the i-th draw is a pure function of (key, i), so
// results never depend on scheduling or worker count.
class CounterStream {
 public:
  explicit CounterStream(std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t next() noexcept { return mix64(key_ + (++counter_) * kGolden); }

  // Uniform on (0, 1].
  double uniform() noexcept { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  // Standard normal via Box-Muller (two draws per variate).
  double normal() noexcept {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ddid::rng
