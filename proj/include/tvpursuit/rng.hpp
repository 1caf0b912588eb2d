#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace tvp {

/// Counter-based random source. The n-th output is a pure function of
/// (key, n), so streams can be split by tag without shared mutable state.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept : key_(mix(seed ^ 0x243f6a8885a308d3ULL)) {}

  /// Independent child stream identified by `tag`.
  Rng split(std::uint64_t tag) const noexcept {
    Rng child(0);
    child.key_ = mix(key_ ^ mix(tag + 0x9e3779b97f4a7c15ULL));
    return child;
  }
  Rng split(std::string_view tag) const noexcept { return split(hash(tag)); }

  result_type operator()() noexcept { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  /// Uniform double in [0, 1) built from the top 53 bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; consumes exactly two draws.
  double normal() noexcept;

  /// Stable seed derivation for experiment cells.
  static std::uint64_t derive(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0) noexcept {
    return mix(mix(mix(base ^ 0x6a09e667f3bcc909ULL) + a) + mix(b + 0x3c6ef372fe94f82bULL) + c);
  }

 private:
  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  static constexpr std::uint64_t hash(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char ch : s) h = (h ^ static_cast<unsigned char>(ch)) * 0x100000001b3ULL;
    return h;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace tvp
