#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "oracles.hpp"
#include "taskprior/errors.hpp"
#include "taskprior/kernel.hpp"
#include "taskprior/prior.hpp"
#include "taskprior/sampler.hpp"
#include "test_support.hpp"

using namespace taskprior;

namespace {

TaskPrior factored_prior(Eigen::MatrixXd z, double t) {
  KernelMatrix k = tp_test::as_kernel((z * z.transpose()).eval());
  k.factor = std::move(z);
  return make_task_prior(std::move(k), t);
}

TaskPrior prior_from(Eigen::MatrixXd k_data, double t) {
  KernelMatrix k = tp_test::as_kernel(std::move(k_data));
  ensure_factor(k);
  return make_task_prior(std::move(k), t);
}

}  // namespace

TEST_CASE("the first prefix step is uniform over classes") {
  CounterRng rng(61);
  const TaskPrior prior = factored_prior(tp_test::random_uniform(4, 2, rng), 0.3);
  PrefixTrace trace;
  prefix_sample(prior, 5, 0, {}, &trace);
  REQUIRE(trace.step_probabilities.size() == 4);
  for (int c = 0; c < 5; ++c)
    CHECK(trace.step_probabilities[0](c) == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("q = 1 labels everything with class zero") {
  CounterRng rng(62);
  const TaskPrior prior = factored_prior(tp_test::random_uniform(6, 3, rng), 0.05);
  const Labeling labeling = prefix_sample(prior, 1, 123);
  for (const int l : labeling.labels) CHECK(l == 0);
}

TEST_CASE("invalid class counts and missing factors are rejected") {
  CounterRng rng(63);
  const TaskPrior factored = factored_prior(tp_test::random_uniform(3, 2, rng), 1.0);
  CHECK_THROWS_AS(prefix_sample(factored, 0, 0), InvalidClassCount);

  const TaskPrior unfactored =
      make_task_prior(tp_test::as_kernel(Eigen::MatrixXd::Identity(3, 3)), 1.0);
  CHECK_THROWS_AS(prefix_sample(unfactored, 2, 0), MissingFactor);
}

TEST_CASE("two-sample agreement probability follows the sequential formula") {
  // K = [[1, 0.9], [0.9, 1]], T = 0.1: after y_0 is placed, class y_0
  // scores exp(K_10 / T) = e^9 against exp(0) for the other class.
  Eigen::MatrixXd k(2, 2);
  k << 1.0, 0.9, 0.9, 1.0;
  const TaskPrior prior = prior_from(k, 0.1);

  const int trials = 100000;
  int agree = 0;
  for (int s = 0; s < trials; ++s) {
    const Labeling l = prefix_sample(prior, 2, static_cast<std::uint64_t>(s));
    if (l.labels[0] == l.labels[1]) ++agree;
  }
  const double expected = std::exp(9.0) / (std::exp(9.0) + 1.0);
  const double se = std::sqrt(expected * (1.0 - expected) / trials);
  CHECK(std::abs(static_cast<double>(agree) / trials - expected) <= 4.0 * se);
}

TEST_CASE("prefix sums satisfy the exact recurrence") {
  CounterRng rng(67);
  const Eigen::MatrixXd z = tp_test::random_uniform(12, 3, rng);
  const TaskPrior prior = factored_prior(z, 0.5);
  PrefixTrace trace;
  const Labeling labeling = prefix_sample(prior, 4, 7, {}, &trace);

  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(3, 4);
  for (Eigen::Index i = 0; i < 12; ++i)
    expected.col(labeling.labels[static_cast<std::size_t>(i)]) +=
        z.row(i).transpose();
  CHECK(trace.prefix_sums == expected);  // bitwise: same addition order
}

TEST_CASE("every step's categorical matches softmax of the prefix scores") {
  CounterRng rng(68);
  const Eigen::MatrixXd z = tp_test::random_uniform(10, 2, rng);
  const TaskPrior prior = factored_prior(z, 0.7);
  PrefixTrace trace;
  const Labeling labeling = prefix_sample(prior, 3, 99, {}, &trace);

  Eigen::MatrixXd prefix = Eigen::MatrixXd::Zero(2, 3);
  for (Eigen::Index i = 0; i < 10; ++i) {
    Eigen::VectorXd h = (z.row(i) * prefix).transpose() / 0.7;
    h.array() -= h.maxCoeff();
    Eigen::VectorXd p = h.array().exp();
    p /= p.sum();
    for (int c = 0; c < 3; ++c)
      CHECK(std::abs(trace.step_probabilities[static_cast<std::size_t>(i)](c) -
                     p(c)) <= 1e-12);
    prefix.col(labeling.labels[static_cast<std::size_t>(i)]) += z.row(i).transpose();
  }
}

TEST_CASE("sampler empirical distribution matches the sequential model") {
  CounterRng rng(71);
  const Eigen::MatrixXd z = tp_test::random_uniform(3, 2, rng);
  const TaskPrior prior = factored_prior(z, 0.5);
  const int q = 3;

  const std::vector<double> oracle =
      tp_test::sequential_model_distribution(prior.kernel.data, 0.5, q);

  std::vector<double> empirical(27, 0.0);
  const int draws = 100000;
  const LabelingMeasure codec{3, q, {}};
  for (int s = 0; s < draws; ++s) {
    const Labeling l = prefix_sample(prior, q, static_cast<std::uint64_t>(s));
    empirical[codec.index_of(l.labels)] += 1.0 / draws;
  }
  CHECK(tp_test::total_variation(empirical, oracle) <= 0.02);
}

TEST_CASE("the sequential model itself is class symmetric") {
  CounterRng rng(73);
  const Eigen::MatrixXd k = tp_test::random_symmetric(4, rng);
  const int q = 3;
  const std::vector<double> dist = tp_test::sequential_model_distribution(k, 0.6, q);
  const LabelingMeasure codec{4, q, {}};
  // swap classes 1 and 2 everywhere: the distribution must not move
  for (std::size_t idx = 0; idx < dist.size(); ++idx) {
    std::vector<int> labels = codec.decode(idx);
    for (int& l : labels) l = l == 1 ? 2 : (l == 2 ? 1 : l);
    CHECK(dist[idx] == doctest::Approx(dist[codec.index_of(labels)]).epsilon(1e-12));
  }
}

TEST_CASE("conditional frequencies replayed against a fixed prefix") {
  Eigen::MatrixXd k(2, 2);
  k << 0.8, 0.35, 0.35, 0.6;
  const TaskPrior prior = prior_from(k, 0.4);

  // keep only runs whose first label is 0 and tally the second label
  std::array<std::int64_t, 2> counts{0, 0};
  Eigen::VectorXd step_p;
  const int total = 200000;
  for (int s = 0; s < total; ++s) {
    PrefixTrace trace;
    const Labeling l = prefix_sample(prior, 2, static_cast<std::uint64_t>(s), {}, &trace);
    if (l.labels[0] != 0) continue;
    ++counts[static_cast<std::size_t>(l.labels[1])];
    step_p = trace.step_probabilities[1];  // identical across kept runs
  }
  const double kept = static_cast<double>(counts[0] + counts[1]);
  REQUIRE(kept > 0.4 * total);
  const double p_hat = static_cast<double>(counts[0]) / kept;
  const double se = std::sqrt(step_p(0) * (1.0 - step_p(0)) / kept);
  CHECK(std::abs(p_hat - step_p(0)) <= 4.0 * se);
}

TEST_CASE("prefix sampling is deterministic per seed") {
  CounterRng rng(79);
  const TaskPrior prior = factored_prior(tp_test::random_uniform(30, 4, rng), 0.2);
  const Labeling a = prefix_sample(prior, 4, 1234);
  const Labeling b = prefix_sample(prior, 4, 1234);
  CHECK(a.labels == b.labels);
}

TEST_CASE("shuffled sampling permutes the visiting order and stays deterministic") {
  CounterRng rng(83);
  const TaskPrior prior = factored_prior(tp_test::random_uniform(20, 3, rng), 0.2);
  PrefixOptions options;
  options.shuffle = true;

  PrefixTrace trace;
  const Labeling a = prefix_sample(prior, 3, 5, options, &trace);
  const Labeling b = prefix_sample(prior, 3, 5, options);
  CHECK(a.labels == b.labels);
  CHECK(a.shuffled);

  // the visiting order is a non-identity permutation of 0..19
  std::vector<Eigen::Index> sorted = trace.order;
  std::sort(sorted.begin(), sorted.end());
  for (Eigen::Index i = 0; i < 20; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
  bool identity = true;
  for (Eigen::Index i = 0; i < 20; ++i)
    if (trace.order[static_cast<std::size_t>(i)] != i) identity = false;
  CHECK(!identity);
}

TEST_CASE("bernoulli graph sampling") {
  SUBCASE("saturated edges are always present") {
    Eigen::MatrixXd k = Eigen::MatrixXd::Ones(3, 3);
    const TaskPrior prior = make_task_prior(tp_test::as_kernel(k), 1e-6);
    for (int s = 0; s < 10000; ++s) {
      const LabelGraph g = bernoulli_graph_sample(prior, static_cast<std::uint64_t>(s));
      CHECK(g.adj.cast<int>().sum() == 9);
    }
  }
  SUBCASE("a fixed seed reproduces the graph bit for bit") {
    CounterRng rng(89);
    const TaskPrior prior =
        make_task_prior(tp_test::as_kernel(tp_test::random_symmetric(6, rng)), 0.8);
    const LabelGraph a = bernoulli_graph_sample(prior, 42);
    const LabelGraph b = bernoulli_graph_sample(prior, 42);
    CHECK(a.adj == b.adj);
  }
  SUBCASE("empirical trace mean matches the closed form") {
    CounterRng rng(97);
    const Eigen::MatrixXd m_data = tp_test::random_symmetric(4, rng);
    const TaskPrior prior =
        make_task_prior(tp_test::as_kernel(tp_test::random_symmetric(4, rng)), 0.6);
    const TaskStats stats = trace_stats(prior, tp_test::as_kernel(m_data), true);

    const int draws = 100000;
    double sum = 0.0;
    for (int d = 0; d < draws; ++d)
      sum += alignment_trace(m_data,
                             bernoulli_graph_sample(prior, static_cast<std::uint64_t>(d)));
    const double se = std::sqrt(stats.variance / draws);
    CHECK(std::abs(sum / draws - stats.mean) <= 4.0 * se);
  }
}

TEST_CASE("metropolis-hastings baseline") {
  SUBCASE("q below two is rejected") {
    const TaskPrior prior =
        make_task_prior(tp_test::as_kernel(Eigen::MatrixXd::Zero(3, 3)), 1.0);
    CHECK_THROWS_AS(mcmc_sample(prior, 1, 10, 0), InvalidClassCount);
    CHECK_THROWS_AS(mcmc_sample(prior, 2, 0, 0), InvalidArgument);
  }

  SUBCASE("identical proposals are always accepted") {
    CHECK(detail::mh_accept(0.0, 0.9999999));
    CHECK(detail::mh_accept(3.0, 0.9999999));
    CHECK(!detail::mh_accept(-50.0, 0.5));
  }

  SUBCASE("zero kernel: the label histogram is uniform under a chi-square test") {
    const TaskPrior prior =
        make_task_prior(tp_test::as_kernel(Eigen::MatrixXd::Zero(4, 4)), 1.0);
    std::array<std::int64_t, 3> counts{0, 0, 0};
    std::int64_t step = 0;
    mcmc_sample(prior, 3, 200000, 11, [&](const std::vector<int>& labels) {
      ++step;
      if (step < 1000 || step % 16 != 0) return;
      for (const int l : labels) ++counts[static_cast<std::size_t>(l)];
    });
    // df = 2, critical value at p = 0.01
    CHECK(tp_test::chi_square_uniform(counts) < 9.21);
  }

  SUBCASE("occupancy matches the restricted measure in total variation") {
    CounterRng rng(103);
    const Eigen::MatrixXd k = tp_test::random_uniform(3, 3, rng, -0.3, 0.3);
    const TaskPrior prior =
        make_task_prior(tp_test::as_kernel(((k + k.transpose()) * 0.5).eval()), 0.5);
    const LabelingMeasure target = restricted_measure(prior, 2);

    std::vector<double> occupancy(8, 0.0);
    const std::int64_t steps = 400000;
    std::int64_t counted = 0;
    mcmc_sample(prior, 2, steps, 17, [&](const std::vector<int>& labels) {
      occupancy[target.index_of(labels)] += 1.0;
      ++counted;
    });
    for (double& o : occupancy) o /= static_cast<double>(counted);
    CHECK(tp_test::total_variation(occupancy, target.prob) <= 0.03);
  }

  SUBCASE("empirical detailed balance: symmetric probability flow") {
    CounterRng rng(107);
    const Eigen::MatrixXd k = tp_test::random_uniform(3, 3, rng, -0.25, 0.25);
    const TaskPrior prior =
        make_task_prior(tp_test::as_kernel(((k + k.transpose()) * 0.5).eval()), 0.5);
    const LabelingMeasure target = restricted_measure(prior, 2);

    // joint frequency of consecutive states (a -> b); stationarity plus
    // reversibility make the flow matrix symmetric
    Eigen::MatrixXd flow = Eigen::MatrixXd::Zero(8, 8);
    std::size_t prev = SIZE_MAX;
    std::int64_t steps = 600000;
    mcmc_sample(prior, 2, steps, 19, [&](const std::vector<int>& labels) {
      const std::size_t state = target.index_of(labels);
      if (prev != SIZE_MAX) flow(static_cast<Eigen::Index>(prev),
                                 static_cast<Eigen::Index>(state)) += 1.0;
      prev = state;
    });
    flow /= flow.sum();
    for (int a = 0; a < 8; ++a)
      for (int b = a + 1; b < 8; ++b) {
        const double f_ab = flow(a, b), f_ba = flow(b, a);
        const double se =
            std::sqrt((f_ab + f_ba) / static_cast<double>(steps)) + 1e-9;
        CHECK(std::abs(f_ab - f_ba) <= 5.0 * se);
      }
  }
}

TEST_CASE("one_hot and label_graph agree") {
  Labeling l;
  l.labels = {0, 2, 1, 0};
  l.q = 3;
  const Eigen::MatrixXd y = one_hot(l);
  CHECK(label_graph(l) == y * y.transpose());
}
