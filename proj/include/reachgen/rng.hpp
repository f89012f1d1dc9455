#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace reachgen {

// splitmix64, used to decorrelate (seed, stream-id) pairs before seeding
// the main generator.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic RNG stream. Conversion to doubles is done by hand so the
// byte stream never depends on the standard library's distribution
// implementation.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0) {
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    s = seed ^ (0x6a09e667f3bcc909ULL + stream_id * 0x3c6ef372fe94f82bULL);
    std::uint64_t b = splitmix64(s);
    gen_.seed(a ^ (b << 1));
  }

  std::uint64_t next_u64() { return gen_(); }

  // uniform in [0, 1)
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // uniform in [lo, hi)
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // standard normal via Box-Muller (always consumes two draws)
  double normal() {
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace reachgen
