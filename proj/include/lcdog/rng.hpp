#pragma once

#include <cstdint>

namespace lcdog {

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// SplitMix64 engine (UniformRandomBitGenerator).
///
/// Seeding is a single store, which lets the grid kernels derive an
/// independent stream per cell from (call key, cell index). That makes the
/// OpenMP kernels produce the same bits as the serial ones regardless of
/// thread count or scheduling.
class Rng {
 public:
  using result_type = std::uint64_t;

  constexpr explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  constexpr result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Lemire's multiply-shift; bias is < n / 2^64, negligible for our n.
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * n) >> 64);
  }

  constexpr std::uint64_t state() const { return state_; }

  friend constexpr bool operator==(const Rng&, const Rng&) = default;

 private:
  std::uint64_t state_;
};

/// Independent stream keyed by (key, index, purpose).
inline constexpr Rng derive_rng(std::uint64_t key, std::uint64_t index, std::uint64_t purpose = 0) {
  return Rng(mix64(key ^ mix64(index * 0xd1342543de82ef95ULL + purpose * 0x2545f4914f6cdd1dULL + 1)));
}

}  // namespace lcdog
