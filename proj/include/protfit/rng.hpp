#pragma once

// Counter-based random streams.
//
// A stream is identified by a 64-bit key derived from (seed, name, indices);
// draw k of the stream is mix64(key + k * golden_gamma), i.e. SplitMix64 run
// from the key. Results are identical on every platform and independent of
// the order in which streams are consumed, which is what lets multistart fits
// and sweep trials run in parallel and still match the serial reference.

#include <cstdint>
#include <string_view>

namespace protfit {

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_name(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Rng {
 public:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  explicit constexpr Rng(std::uint64_t key) : key_(key) {}

  /// Named stream derived from a seed, optionally split further by indices.
  static constexpr Rng stream(std::uint64_t seed, std::string_view name) {
    return Rng(mix64(mix64(seed) ^ hash_name(name)));
  }
  [[nodiscard]] constexpr Rng split(std::uint64_t index) const {
    return Rng(mix64(key_ ^ mix64(index + kGamma)));
  }

  constexpr std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGamma); }

  /// Uniform in [0, 1) with 53 random bits.
  constexpr double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  constexpr double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, n), n > 0.
  constexpr std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  [[nodiscard]] constexpr std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace protfit
