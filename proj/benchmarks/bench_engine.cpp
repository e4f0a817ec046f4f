#include <benchmark/benchmark.h>

#include <vector>

#include "adaptive_median/engine.hpp"
#include "adaptive_median/rng.hpp"

using namespace adaptive_median;

namespace {

// Answer throughput of a session on packed-feature data, aggressive profile
// so the block count is the knob.
void BM_session_answer(benchmark::State& state) {
  const auto blocks = static_cast<std::size_t>(state.range(0));
  const std::size_t t = 4;

  Rng rng(7);
  std::vector<Sample> samples(blocks * t);
  for (Sample& s : samples) s = rng.next_u64() & 0x1ffff;

  SessionConfig config;
  config.block_size = t;
  config.max_queries = 1u << 30;
  config.max_range_size = 41;
  config.beta = 0.05;
  config.aggressive = AggressiveBudget{1000.0, 1e-6};
  config.seed = 1;
  Session session = Session::open(std::move(samples), config);

  const FiniteRange grid = FiniteRange::grid(-1.0, 1.0, 0.05);
  const EstimatorQuery query(t, grid, [](std::span<const Sample> block) {
    double acc = 0.0;
    for (Sample s : block) acc += (s & 1) ? 1.0 : -1.0;
    return acc / static_cast<double>(block.size());
  });

  for (auto _ : state) benchmark::DoNotOptimize(session.answer(query));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(blocks * t));
}

}  // namespace

BENCHMARK(BM_session_answer)->Arg(1000)->Arg(140000);
