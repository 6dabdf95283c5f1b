#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace sbf {

// Deterministic counter-splittable RNG. All randomness in the project flows
// through this generator so results are reproducible from a single 64-bit
// seed regardless of call-site reordering: independent purposes derive
// independent streams via derive().
//
// Core generator is SplitMix64; normals come from Box-Muller on 53-bit
// uniforms, so sequences do not depend on libstdc++ distribution internals.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform_in(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  uint64_t uniform_int(uint64_t n) {
    // rejection sampling keeps the draw exactly uniform
    const uint64_t limit = n * ((~uint64_t{0}) / n);
    uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return r % n;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    // u1 = 0 would give log(0); shift into (0, 1]
    u1 = 1.0 - u1;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Derived stream for a named purpose plus integer indices. Streams with
  // different arguments are statistically independent of each other and of
  // the parent, and never consume state from the parent.
  Rng derive(std::string_view purpose, uint64_t a = 0, uint64_t b = 0,
             uint64_t c = 0) const {
    uint64_t h = state_ ^ 0x51afd6ed558ccd6dull;
    for (char ch : purpose) h = mix(h ^ static_cast<uint64_t>(ch));
    h = mix(h ^ a);
    h = mix(h ^ b);
    h = mix(h ^ c);
    return Rng(h);
  }

  uint64_t state() const { return state_; }

 private:
  static uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 33)) * 0xff51afd7ed558ccdull;
    z = (z ^ (z >> 33)) * 0xc4ceb9fe1a85ec53ull;
    return z ^ (z >> 33);
  }

  uint64_t state_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sbf
