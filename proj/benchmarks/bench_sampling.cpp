#include <benchmark/benchmark.h>

#include "rcb/exploitation.hpp"
#include "rcb/rng.hpp"

namespace {

void BM_ActionDistribution(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  rcb::Rng rng(7);
  std::vector<double> mu_hats(static_cast<std::size_t>(k));
  for (auto& m : mu_hats) m = rng.uniform01();
  for (auto _ : state) {
    benchmark::DoNotOptimize(rcb::action_distribution(mu_hats, 40.0));
  }
}

void BM_SampleAction(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  rcb::Rng rng(7);
  std::vector<double> mu_hats(static_cast<std::size_t>(k));
  for (auto& m : mu_hats) m = rng.uniform01();
  const auto dist = rcb::action_distribution(mu_hats, 40.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rcb::sample_action(dist, rng.uniform01()));
  }
}

}  // namespace

BENCHMARK(BM_ActionDistribution)->Arg(2)->Arg(10)->Arg(50);
BENCHMARK(BM_SampleAction)->Arg(2)->Arg(10)->Arg(50);
