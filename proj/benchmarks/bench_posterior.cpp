#include <benchmark/benchmark.h>

#include "rcb/linear_model.hpp"
#include "rcb/rng.hpp"

namespace {

std::vector<rcb::Observation> make_batch(int dim, long n, rcb::Rng& rng) {
  std::vector<rcb::Observation> obs;
  obs.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    Eigen::VectorXd x(dim);
    for (int j = 0; j < dim; ++j) x[j] = rng.normal();
    obs.push_back({std::move(x), rng.normal()});
  }
  return obs;
}

void BM_PosteriorUpdate(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const long n = state.range(1);
  rcb::Rng rng(42);
  const auto prior = rcb::make_arm_belief(
      Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Identity(dim, dim), 0.1);
  const auto batch = make_batch(dim, n, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rcb::posterior_update(prior, batch));
  }
  state.SetItemsProcessed(state.iterations() * n);
}

void BM_StatsAccumulate(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  rcb::Rng rng(42);
  const auto prior = rcb::make_arm_belief(
      Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Identity(dim, dim), 0.1);
  const auto batch = make_batch(dim, 64, rng);
  for (auto _ : state) {
    rcb::GaussianArmStats stats(dim);
    for (const auto& o : batch) stats.add(o.x, o.y);
    benchmark::DoNotOptimize(stats.posterior_mean(prior));
  }
}

}  // namespace

BENCHMARK(BM_PosteriorUpdate)
    ->Args({3, 64})
    ->Args({10, 64})
    ->Args({70, 64})
    ->Args({10, 1024});
BENCHMARK(BM_StatsAccumulate)->Arg(3)->Arg(10)->Arg(70);
