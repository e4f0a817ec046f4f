#include "adaptive_median/rng.hpp"

#include <cmath>
#include <numbers>

#include "adaptive_median/errors.hpp"

namespace adaptive_median {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& word : s_) word = splitmix64(x);
}

Rng Rng::derive(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed;
  std::uint64_t a = splitmix64(x);
  std::uint64_t y = stream ^ 0xd1b54a32d192ed03ULL;
  std::uint64_t b = splitmix64(y);
  return Rng(a ^ rotl(b, 17));
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  if (n == 0) throw ParameterError("uniform_index: n must be positive");
  // Lemire rejection method.
  std::uint64_t x = next_u64();
  unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = next_u64();
      m = static_cast<unsigned __int128>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

bool Rng::bernoulli(double p) { return uniform() < p; }

double Rng::gaussian() {
  // Box-Muller; u1 in (0, 1] so log stays finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

double Rng::laplace(double scale) {
  const double u = uniform() - 0.5;  // [-0.5, 0.5)
  const double mag = 1.0 - 2.0 * std::abs(u);
  const double x = -scale * std::log(mag > 0x1.0p-120 ? mag : 0x1.0p-120);
  return u < 0 ? -x : x;
}

std::uint64_t Rng::state_stamp() const {
  std::uint64_t h = 0x2545f4914f6cdd1dULL;
  for (std::uint64_t word : s_) {
    h ^= word;
    h *= 0x100000001b3ULL;
    h = rotl(h, 29);
  }
  return h;
}

}  // namespace adaptive_median
