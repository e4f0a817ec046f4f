#pragma once

#include <array>
#include <cstdint>

namespace adaptive_median {

// Seedable xoshiro256++ generator with splitmix64 stream derivation.
//
// All randomized mechanisms take an Rng by reference so that sessions replay
// bit-for-bit under a fixed seed. Distribution transforms are implemented
// here (not via <random> std distributions, whose output is
// implementation-defined) so results are stable across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Deterministic independent stream for (seed, stream), e.g. per trial or
  // per query index.
  static Rng derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();

  // Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);

  // Unbiased integer in [0, n); n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  bool bernoulli(double p);

  // Standard normal via Box-Muller.
  double gaussian();
  double gaussian(double mean, double stddev);

  // Centered Laplace with the given scale b (density ~ exp(-|x|/b)).
  double laplace(double scale);

  // Order-independent fingerprint of the current state, recorded in
  // transcripts so replays can be cross-checked.
  std::uint64_t state_stamp() const;

 private:
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace adaptive_median
