#pragma once

#include <cmath>
#include <cstdint>

namespace melmix {

// Counter-based RNG. Every draw is a pure hash of (seed, stream, counter),
// so masks and init values do not depend on evaluation order, thread
// scheduling, or the standard library's distribution internals.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::uint64_t bits(std::uint64_t counter) const {
    return mix(mix(mix(seed) ^ stream) ^ counter);
  }

  // Uniform in [0, 1), 24 bits of mantissa.
  float uniform(std::uint64_t counter) const {
    return static_cast<float>(bits(counter) >> 40) * 0x1.0p-24f;
  }

  // Uniform in [lo, hi).
  float uniform(std::uint64_t counter, float lo, float hi) const {
    return lo + (hi - lo) * uniform(counter);
  }

  // Standard normal via Box-Muller on two derived uniforms.
  float normal(std::uint64_t counter) const {
    const std::uint64_t b = bits(counter);
    const double u1 = (static_cast<double>(b >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(bits(counter ^ 0x5851f42d4c957f2dull) >> 11) * 0x1.0p-53;
    return static_cast<float>(std::sqrt(-2.0 * std::log(u1)) *
                              std::cos(6.283185307179586 * u2));
  }

  // Derive a child stream; children with distinct tags are independent.
  RngStream fork(std::uint64_t tag) const {
    return RngStream{seed, mix(stream ^ mix(tag))};
  }
};

}  // namespace melmix
