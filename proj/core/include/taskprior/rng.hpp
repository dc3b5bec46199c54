#pragma once

#include <cmath>
#include <cstdint>

namespace taskprior {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// Finalizer from SplitMix64 (Steele et al.); full-avalanche 64-bit mix.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

}  // namespace detail

/// Deterministic counter-based generator. Output k of a (seed, stream)
/// pair is a pure function of (seed, stream, k): state advances by a
/// per-stream odd increment and each output is mix64(state). Streams with
/// distinct indices are statistically independent sequences, so replaying
/// one stream never perturbs another.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : state_(detail::mix64(seed + detail::kGolden)),
        gamma_(detail::mix64(stream * detail::kGolden + 0xDA942042E4DD58B5ull) |
               1ull) {}

  std::uint64_t next_u64() {
    state_ += gamma_;
    return detail::mix64(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n), n > 0. Lemire multiply-shift.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  /// Standard normal via Box-Muller; second value of each pair is cached.
  double next_gaussian() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = 1.0 - next_double();  // (0, 1]
    const double u2 = next_double();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    cached_ = radius * std::sin(angle);
    have_cached_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::uint64_t state_;
  std::uint64_t gamma_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

/// Stable derivation of child seeds for independent sub-computations.
inline constexpr std::uint64_t derived_seed(std::uint64_t base, std::uint64_t salt) {
  return detail::mix64(base + detail::kGolden * (salt + 1));
}

}  // namespace taskprior
