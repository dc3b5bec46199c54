#include <benchmark/benchmark.h>

#include "taskprior/kernel.hpp"
#include "taskprior/rng.hpp"

using namespace taskprior;

namespace {

FeatureMatrix random_features(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  CounterRng rng(seed);
  Eigen::MatrixXd f(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) f(i, j) = rng.next_gaussian();
  return make_feature_matrix(std::move(f), "bench");
}

void BM_centered_cosine(benchmark::State& state) {
  const FeatureMatrix f = random_features(state.range(0), 128, 1);
  for (auto _ : state) {
    const KernelMatrix k = centered_cosine_kernel(f);
    benchmark::DoNotOptimize(k.data.data());
  }
}

void BM_factorize(benchmark::State& state) {
  const KernelMatrix k = centered_cosine_kernel(random_features(state.range(0), 64, 2));
  for (auto _ : state) {
    const Eigen::MatrixXd z = factorize(k);
    benchmark::DoNotOptimize(z.data());
  }
}

}  // namespace

BENCHMARK(BM_centered_cosine)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_factorize)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
