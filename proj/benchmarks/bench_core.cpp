#include <benchmark/benchmark.h>

#include <vector>

#include "adaptive_median/distribution.hpp"
#include "adaptive_median/finite_range.hpp"
#include "adaptive_median/rng.hpp"

using namespace adaptive_median;

namespace {

void BM_project(benchmark::State& state) {
  const FiniteRange grid = FiniteRange::grid(-5.0, 5.0, 0.01);
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(grid.project(rng.uniform(-6.0, 6.0)));
}

void BM_quantile_interval(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  std::vector<double> values(n);
  for (double& v : values) v = static_cast<double>(rng.uniform_index(1000));
  const EmpiricalDistribution dist(values);
  for (auto _ : state) benchmark::DoNotOptimize(quantile_interval(dist, 0.25, 0.75).members);
}

void BM_empirical_from_histogram(benchmark::State& state) {
  const FiniteRange grid = FiniteRange::grid(0.0, 1.0, 0.01);
  Rng rng(3);
  std::vector<std::uint64_t> counts(grid.size());
  for (auto& c : counts) c = rng.uniform_index(1000);
  for (auto _ : state)
    benchmark::DoNotOptimize(EmpiricalDistribution::from_histogram(grid, counts).size());
}

}  // namespace

BENCHMARK(BM_project);
BENCHMARK(BM_quantile_interval)->Arg(1000)->Arg(100000);
BENCHMARK(BM_empirical_from_histogram);
