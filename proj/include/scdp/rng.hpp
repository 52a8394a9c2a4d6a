#pragma once

// Deterministic RNG with self-owned distributions. The std:: distribution
// objects are implementation-defined, which would break byte-identical
// artifacts across toolchains, so uniform/normal are generated explicitly.

#include <cmath>
#include <cstdint>
#include <random>

namespace scdp {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed), base_seed_proxy_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  std::uint64_t uniform_index(std::uint64_t n) {
    // 128-bit multiply keeps the map unbiased enough for n << 2^64
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

  // standard normal via Box-Muller, spare cached
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Derive an independent stream (per rollout / per trial seeding).
  Rng fork(std::uint64_t stream) const {
    return Rng(seed_mix(base_seed_proxy_, stream));
  }

  static std::uint64_t seed_mix(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over the combined words
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t base_seed_proxy_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace scdp
