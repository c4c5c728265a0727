#ifndef COHERENCE_RNG_HPP_
#define COHERENCE_RNG_HPP_

#include <cstdint>

namespace coherence {

/// Deterministic 64-bit splittable generator (splitmix64, Steele et al.).
/// All randomness in the library flows through this type so that results
/// are bit-reproducible across platforms and standard-library versions.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    // Rejection-free is fine here: n is tiny relative to 2^64.
    return n == 0 ? 0 : next_u64() % n;
  }

  /// Independent child stream; derives a fresh state from the parent.
  SplitMix64 split() { return SplitMix64(next_u64() ^ 0xA02F0C1B34D5E6F7ULL); }

 private:
  std::uint64_t state_;
};

/// Stable per-instance seed derivation for parallel seed sweeps.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  SplitMix64 g(base ^ (0x9E3779B97F4A7C15ULL * (index + 1)));
  return g.next_u64();
}

}  // namespace coherence

#endif  // COHERENCE_RNG_HPP_
