#include <benchmark/benchmark.h>

#include <vector>

#include "adaptive_median/distribution.hpp"
#include "adaptive_median/dp_median.hpp"
#include "adaptive_median/finite_range.hpp"
#include "adaptive_median/rng.hpp"

using namespace adaptive_median;

namespace {

EmpiricalDistribution random_values(std::size_t m, std::size_t r, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> values(m);
  for (double& v : values) v = static_cast<double>(rng.uniform_index(r));
  return EmpiricalDistribution(std::move(values));
}

void BM_em_median(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto r = static_cast<std::size_t>(state.range(1));
  const FiniteRange grid = FiniteRange::grid(0.0, static_cast<double>(r - 1), 1.0);
  const EmpiricalDistribution values = random_values(m, r, 1);
  Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(em_median(values, grid, 0.05, rng));
}

void BM_em_exact_distribution(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto r = static_cast<std::size_t>(state.range(1));
  const FiniteRange grid = FiniteRange::grid(0.0, static_cast<double>(r - 1), 1.0);
  const EmpiricalDistribution values = random_values(m, r, 3);
  for (auto _ : state) benchmark::DoNotOptimize(em_exact_distribution(values, grid, 0.05));
}

void BM_utility_decomposition(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const FiniteRange grid = FiniteRange::grid(0.0, 1023.0, 1.0);
  const EmpiricalDistribution values = random_values(m, 1024, 4);
  for (auto _ : state) {
    UtilityProfile profile(values, grid);
    benchmark::DoNotOptimize(profile.runs().size());
  }
}

}  // namespace

BENCHMARK(BM_em_median)->Args({1000, 256})->Args({100000, 41})->Args({100000, 1001});
BENCHMARK(BM_em_exact_distribution)->Args({1000, 256})->Args({100000, 1001});
BENCHMARK(BM_utility_decomposition)->Arg(1000)->Arg(100000);

BENCHMARK_MAIN();
