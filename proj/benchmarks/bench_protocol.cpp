#include <benchmark/benchmark.h>

#include "rcb/simulation.hpp"

namespace {

// Whole-run throughput: cold start plus exploitation at desk scale.
void BM_FullRun(benchmark::State& state) {
  rcb::SimParams params;
  params.horizon = state.range(0);
  params.num_arms = 3;
  params.dim = 3;
  params.n_override = 50;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rcb::run_simulation(params, seed++));
  }
  state.SetItemsProcessed(state.iterations() * params.horizon);
}

}  // namespace

BENCHMARK(BM_FullRun)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
