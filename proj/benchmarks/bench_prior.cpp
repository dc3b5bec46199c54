#include <benchmark/benchmark.h>

#include "taskprior/parallel.hpp"
#include "taskprior/prior.hpp"
#include "taskprior/rng.hpp"

using namespace taskprior;

namespace {

TaskPrior make_prior(Eigen::Index n, std::uint64_t seed) {
  CounterRng rng(seed);
  Eigen::MatrixXd z(n, 8);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < 8; ++j) z(i, j) = rng.next_gaussian();
  KernelMatrix k;
  k.data = z * z.transpose();
  return make_task_prior(std::move(k), 0.5);
}

void BM_expected_trace(benchmark::State& state) {
  set_max_threads(static_cast<int>(state.range(1)));
  const TaskPrior prior = make_prior(state.range(0), 1);
  for (auto _ : state) {
    const TaskStats stats = trace_stats(prior, prior.kernel, true);
    benchmark::DoNotOptimize(stats.mean);
  }
  set_max_threads(0);
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_enumerate_measure(benchmark::State& state) {
  const TaskPrior prior = make_prior(state.range(0), 2);
  for (auto _ : state) {
    const GraphMeasure measure = enumerate_measure(prior);
    benchmark::DoNotOptimize(measure.prob.data());
  }
}

}  // namespace

BENCHMARK(BM_expected_trace)
    ->Args({512, 1})
    ->Args({2048, 1})
    ->Args({2048, 0})
    ->Args({8192, 0})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_enumerate_measure)->Arg(3)->Arg(4);

BENCHMARK_MAIN();
