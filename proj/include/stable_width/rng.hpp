#pragma once

// Counter-based random streams.
//
// Every random quantity in the library is a pure function of a 64-bit key and
// a counter. Keys are derived from the user seed and a tuple of tags
// (replicate, layer, node, ...), so any weight W_ij of any replicate can be
// regenerated on demand without storing it and independently of the order in
// which replicates are processed.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace stable_width {

namespace rng_detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Second finalizer with different constants (Moremur).
constexpr std::uint64_t mix64b(std::uint64_t z) noexcept {
  z = (z ^ (z >> 27)) * 0x3C79AC492BA7B653ULL;
  z = (z ^ (z >> 33)) * 0x1C69B3F74AC4AE35ULL;
  return z ^ (z >> 27);
}

}  // namespace rng_detail

/// Identifies one independent random stream.
struct StreamKey {
  std::uint64_t value = 0;

  /// Child stream tagged by `tag`.
  [[nodiscard]] constexpr StreamKey child(std::uint64_t tag) const noexcept {
    return StreamKey{rng_detail::mix64(value ^ rng_detail::mix64b(tag + rng_detail::kGolden))};
  }

  [[nodiscard]] constexpr StreamKey child(std::initializer_list<std::uint64_t> tags) const noexcept {
    StreamKey k = *this;
    for (auto t : tags) k = k.child(t);
    return k;
  }

  /// 64 random bits at position `counter` of this stream.
  [[nodiscard]] constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    // Two keyed rounds: distinct keys never share a lattice of counters.
    return rng_detail::mix64b(rng_detail::mix64(value + counter * rng_detail::kGolden) ^ value);
  }

  friend constexpr bool operator==(StreamKey, StreamKey) = default;
};

/// Root key for a user seed.
[[nodiscard]] constexpr StreamKey root_key(std::uint64_t seed) noexcept {
  return StreamKey{rng_detail::mix64(seed ^ 0x5DEECE66DULL)};
}

// Domain tags keep unrelated consumers of the same seed apart.
enum class Domain : std::uint64_t {
  kWeight = 1,
  kBias = 2,
  kNu1 = 3,
  kRecursion = 4,
  kSampler = 5,
  kBootstrap = 6,
  kOracle = 7,
  kSweep = 8,
};

[[nodiscard]] constexpr StreamKey domain_key(std::uint64_t seed, Domain d) noexcept {
  return root_key(seed).child(static_cast<std::uint64_t>(d));
}

/// Uniform on the open interval (0,1) from the top 53 bits.
[[nodiscard]] inline double to_open_unit(std::uint64_t b) noexcept {
  return (static_cast<double>(b >> 11) + 0.5) * 0x1.0p-53;
}

/// Uniform on (0,1) from the low 53 bits; leaves the top bit free for a sign.
[[nodiscard]] inline double to_open_unit_low(std::uint64_t b) noexcept {
  return (static_cast<double>(b & ((1ULL << 53) - 1)) + 0.5) * 0x1.0p-53;
}

[[nodiscard]] inline double sign_from_top_bit(std::uint64_t b) noexcept {
  return (b >> 63) ? -1.0 : 1.0;
}

/// Sequential view of a keyed stream. Cheap to copy; never shared between
/// threads.
class CounterStream {
 public:
  CounterStream() = default;
  explicit CounterStream(StreamKey key, std::uint64_t start = 0) : key_(key), counter_(start) {}

  std::uint64_t next_bits() noexcept { return key_.bits(counter_++); }
  double uniform() noexcept { return to_open_unit(next_bits()); }
  double exponential() noexcept { return -std::log(uniform()); }
  double normal() noexcept {
    // Box-Muller, one variate per pair.
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_bits()) * n) >> 64);
  }

  [[nodiscard]] StreamKey key() const noexcept { return key_; }
  [[nodiscard]] std::uint64_t counter() const noexcept { return counter_; }

 private:
  StreamKey key_{};
  std::uint64_t counter_ = 0;
};

}  // namespace stable_width
