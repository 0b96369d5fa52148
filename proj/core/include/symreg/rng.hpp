#pragma once

#include <cmath>
#include <cstdint>

namespace symreg {

// SplitMix64. Used both as a stream generator and to derive independent
// sub-stream seeds, so per-expression streams do not depend on how a batch
// is sharded across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller (polar-free form; deterministic everywhere).
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double two_pi = 6.283185307179586476925286766559;
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(two_pi * u2);
    have_spare_ = true;
    return r * std::cos(two_pi * u2);
  }

  // Normal with mean 0 and the given standard deviation.
  double next_normal(double stddev) { return stddev * next_normal(); }

  // Derives a decorrelated seed for an independent sub-stream.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    Rng mix(seed ^ (0x9e3779b97f4a7c15ull * (stream + 1)));
    mix.next_u64();
    return mix.next_u64();
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace symreg
