#ifndef PFORGE_RNG_HPP
#define PFORGE_RNG_HPP

#include <cmath>
#include <complex>
#include <cstdint>

namespace pforge {

// All randomness in the project flows through this generator so that runs
// replay bit-exactly from a single seed. The uniform stream is xoshiro256**
// seeded through SplitMix64; normals use the Marsaglia polar method (no
// std::<distribution> types, whose output is implementation-defined).

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Mixes a base seed with a stream index into an independent sub-seed.
/// Used to give every optimizer start / perturbation / epoch its own stream.
inline uint64_t derive_seed(uint64_t base, uint64_t stream) {
  uint64_t s = base ^ (0xD1B54A32D192ED03ull * (stream + 1));
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed) {
    uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
    has_spare_ = false;
    spare_ = 0.0;
  }

  uint64_t seed() const { return seed_; }

  /// A fresh generator on an independent stream derived from this seed.
  Rng derive(uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

  uint64_t next_u64() {
    const uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be positive. Modulo bias is
  /// negligible for the index ranges used here (n << 2^64).
  uint64_t uniform_index(uint64_t n) { return next_u64() % n; }

  /// Standard normal N(0, 1), Marsaglia polar method.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * factor;
    has_spare_ = true;
    return u * factor;
  }

  /// Standard complex normal CN(0, 1): real and imaginary parts are
  /// independent N(0, 1/2), so E|z|^2 = 1.
  std::complex<double> complex_normal() {
    constexpr double kInvSqrt2 = 0.70710678118654752440;
    const double re = normal() * kInvSqrt2;
    const double im = normal() * kInvSqrt2;
    return {re, im};
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t state_[4];
  uint64_t seed_;
  double spare_;
  bool has_spare_;
};

}  // namespace pforge

#endif  // PFORGE_RNG_HPP
