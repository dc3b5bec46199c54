#include <benchmark/benchmark.h>

#include "taskprior/rng.hpp"
#include "taskprior/sampler.hpp"

using namespace taskprior;

namespace {

TaskPrior factor_only_prior(Eigen::Index n, Eigen::Index r, std::uint64_t seed) {
  CounterRng rng(seed);
  Eigen::MatrixXd z(n, r);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < r; ++j) z(i, j) = rng.next_gaussian();
  KernelMatrix k;
  k.factor = std::move(z);
  return make_task_prior(std::move(k), 1.0);
}

void BM_prefix_sample(benchmark::State& state) {
  const TaskPrior prior = factor_only_prior(state.range(0), 32, 3);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const Labeling l = prefix_sample(prior, 10, seed++);
    benchmark::DoNotOptimize(l.labels.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_bernoulli_graph(benchmark::State& state) {
  CounterRng rng(4);
  const Eigen::Index n = state.range(0);
  Eigen::MatrixXd k_data(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) k_data(i, j) = rng.next_gaussian();
  const TaskPrior prior =
      make_task_prior(precomputed_kernel(std::move(k_data), false), 0.7);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const LabelGraph g = bernoulli_graph_sample(prior, seed++);
    benchmark::DoNotOptimize(g.adj.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

void BM_mcmc_steps(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  CounterRng rng(5);
  Eigen::MatrixXd k_data(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) k_data(i, j) = 0.2 * rng.next_gaussian();
  const TaskPrior prior =
      make_task_prior(precomputed_kernel(std::move(k_data), false), 0.5);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const Labeling l = mcmc_sample(prior, 4, 1000, seed++);
    benchmark::DoNotOptimize(l.labels.data());
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}

}  // namespace

BENCHMARK(BM_prefix_sample)->Range(1 << 10, 1 << 17)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_bernoulli_graph)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_mcmc_steps)->Arg(64)->Arg(512)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
