#ifndef EXTRAP_RNG_H_
#define EXTRAP_RNG_H_

#include <cstdint>

namespace extrap {

// Counter-based generator: draw c of seed s is the c-th output of SplitMix64
// started at state s, i.e. mix64(s + (c + 1) * 0x9E3779B97F4A7C15), where
// mix64 is the SplitMix64 finalizer. Any draw is addressable without
// generating the ones before it.
//
// Normal draw c uses bits(2c) and bits(2c+1) through the cosine branch of
// Box-Muller: u1 = (bits(2c) >> 11 + 1) * 2^-53 in (0, 1],
// u2 = (bits(2c+1) >> 11) * 2^-53 in [0, 1), z = sqrt(-2 ln u1) cos(2 pi u2).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t bits(std::uint64_t counter) const;
  // Uniform in [0, 1).
  double uniform(std::uint64_t counter) const;
  // Standard normal.
  double normal(std::uint64_t counter) const;

 private:
  std::uint64_t seed_;
};

std::uint64_t mix64(std::uint64_t x);

// Independent stream seed for a labeled sub-task (a training step, a group).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace extrap

#endif  // EXTRAP_RNG_H_
