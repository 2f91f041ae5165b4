#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace collusim {

// splitmix64 finalizer; used for seed derivation and stream splitting.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256++ with explicit, platform-independent draw primitives. Every
// stochastic component of the library draws through this type so that a
// (master_seed, stream) pair fully determines all outputs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : state_) {
      x = mix64(x);
      w = x;
    }
  }

  // Independent stream derivation: stream i of a master seed.
  static Rng for_stream(std::uint64_t master_seed, std::uint64_t stream) {
    return Rng(mix64(master_seed ^ mix64(stream + 1)));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased uniform integer in [0, n). Lemire's rejection method.
  std::uint32_t next_below(std::uint32_t n) {
    std::uint64_t m = static_cast<std::uint64_t>(static_cast<std::uint32_t>(next_u64())) * n;
    auto lo = static_cast<std::uint32_t>(m);
    if (lo < n) {
      const std::uint32_t threshold = (0u - n) % n;
      while (lo < threshold) {
        m = static_cast<std::uint64_t>(static_cast<std::uint32_t>(next_u64())) * n;
        lo = static_cast<std::uint32_t>(m);
      }
    }
    return static_cast<std::uint32_t>(m >> 32);
  }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Exact Binomial(n, p) sample by CDF inversion. Intended for n*p of order
  // one (exploration-event counts), where the walk terminates after a few
  // steps.
  std::uint64_t next_binomial(std::uint64_t n, double p);

  // m distinct values from [0, n), ascending.
  std::vector<std::uint64_t> sample_without_replacement(std::uint64_t n, std::uint64_t m);

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::array<std::uint64_t, 4> state_;
};

}  // namespace collusim
