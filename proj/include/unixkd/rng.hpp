#pragma once

#include <cmath>
#include <cstdint>

namespace unixkd {

// Counter-based splittable PRNG (SplitMix64 core). Integer arithmetic only,
// so streams are identical on every platform.
class SplitMix64 {
 public:
  static constexpr uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ull;

  explicit SplitMix64(uint64_t seed, uint64_t gamma = kGoldenGamma)
      : state_(seed), gamma_(gamma | 1ull) {}

  uint64_t next_u64() {
    state_ += gamma_;
    return mix(state_);
  }

  // uniform [0,1), 53-bit resolution
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // uniform (0,1]; safe to feed into log()
  double next_open_double() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Box-Muller, one draw per pair of uniforms
  double next_gaussian() {
    double u1 = next_open_double();
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586477 * u2);
  }

  uint64_t next_below(uint64_t bound) {
    return bound ? next_u64() % bound : 0;
  }

  // Independent stream addressed by salt; does not advance this stream.
  SplitMix64 derive(uint64_t salt) const {
    return SplitMix64(mix(state_ ^ mix(salt + kGoldenGamma)),
                      mix_gamma(mix(salt) + gamma_));
  }

  static uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  static uint64_t mix_gamma(uint64_t z) {
    z = mix(z) | 1ull;
    int transitions = __builtin_popcountll(z ^ (z >> 1));
    return (transitions < 24) ? z ^ 0xaaaaaaaaaaaaaaaaull : z;
  }

  uint64_t state_;
  uint64_t gamma_;
};

}  // namespace unixkd
