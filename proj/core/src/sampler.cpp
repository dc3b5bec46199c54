#include "taskprior/sampler.hpp"

#include <cmath>
#include <numeric>

#include "taskprior/errors.hpp"
#include "taskprior/rng.hpp"

namespace taskprior {

namespace {

// Stream tags keep the per-purpose RNG streams disjoint from the
// per-sample-index streams used by the categorical draws.
constexpr std::uint64_t kShuffleStream = 0xF1A7'0000'0000'0001ull;
constexpr std::uint64_t kBernoulliStream = 0xF1A7'0000'0000'0002ull;
constexpr std::uint64_t kMcmcStream = 0xF1A7'0000'0000'0003ull;

// Inverse-CDF draw from an (already normalized) categorical.
int draw_categorical(const Eigen::VectorXd& p, double u) {
  double cum = 0.0;
  const int q = static_cast<int>(p.size());
  for (int c = 0; c < q; ++c) {
    cum += p(c);
    if (u < cum) return c;
  }
  return q - 1;  // guard against cumulative rounding
}

std::vector<Eigen::Index> sample_order(Eigen::Index n, bool shuffle,
                                       std::uint64_t seed) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  if (shuffle) {
    CounterRng rng(seed, kShuffleStream);
    for (Eigen::Index i = n - 1; i > 0; --i)
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(
                    rng.next_below(static_cast<std::uint64_t>(i) + 1))]);
  }
  return order;
}

}  // namespace

Labeling prefix_sample(const TaskPrior& prior, int q, std::uint64_t seed,
                       const PrefixOptions& options, PrefixTrace* trace) {
  if (q < 1) throw InvalidClassCount("need q >= 1, got " + std::to_string(q));
  if (!prior.kernel.factor)
    throw MissingFactor("prior kernel has no factor; call factorize() first");

  const Eigen::MatrixXd& z = *prior.kernel.factor;
  const Eigen::Index n = z.rows();
  const Eigen::Index r = z.cols();
  const double inv_t = 1.0 / prior.temperature;

  const std::vector<Eigen::Index> order = sample_order(n, options.shuffle, seed);

  Labeling labeling;
  labeling.labels.assign(static_cast<std::size_t>(n), 0);
  labeling.q = q;
  labeling.seed = seed;
  labeling.temperature = prior.temperature;
  labeling.shuffled = options.shuffle;

  if (trace) {
    trace->step_probabilities.clear();
    trace->step_probabilities.reserve(static_cast<std::size_t>(n));
    trace->order = order;
  }

  Eigen::MatrixXd prefix = Eigen::MatrixXd::Zero(r, q);  // class-wise sums of Z rows
  Eigen::VectorXd h(q);
  for (Eigen::Index step = 0; step < n; ++step) {
    const Eigen::Index i = order[static_cast<std::size_t>(step)];
    h.noalias() = (z.row(i) * prefix).transpose() * inv_t;
    h.array() -= h.maxCoeff();
    Eigen::VectorXd p = h.array().exp();
    p /= p.sum();

    CounterRng rng(seed, static_cast<std::uint64_t>(i));
    const int c = draw_categorical(p, rng.next_double());
    labeling.labels[static_cast<std::size_t>(i)] = c;
    prefix.col(c) += z.row(i).transpose();
    if (trace) trace->step_probabilities.push_back(std::move(p));
  }
  if (trace) trace->prefix_sums = std::move(prefix);
  return labeling;
}

LabelGraph bernoulli_graph_sample(const TaskPrior& prior, std::uint64_t seed) {
  const Eigen::Index n = prior.n();
  const double inv_t = 1.0 / prior.temperature;
  const Eigen::MatrixXd& k = prior.kernel.data;

  LabelGraph graph;
  graph.adj.resize(n, n);
  graph.seed = seed;
  graph.temperature = prior.temperature;

  CounterRng rng(seed, kBernoulliStream);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      graph.adj(i, j) =
          rng.next_double() < sigmoid(k(i, j) * inv_t) ? std::uint8_t{1}
                                                        : std::uint8_t{0};
  return graph;
}

Labeling mcmc_sample(const TaskPrior& prior, int q, std::int64_t n_steps,
                     std::uint64_t seed,
                     const std::function<void(const std::vector<int>&)>& on_step) {
  if (q < 2)
    throw InvalidClassCount("Metropolis-Hastings needs q >= 2, got " +
                            std::to_string(q));
  if (n_steps < 1)
    throw InvalidArgument("need n_steps >= 1, got " + std::to_string(n_steps));

  const Eigen::Index n = prior.n();
  const Eigen::MatrixXd& k = prior.kernel.data;
  const double inv_t = 1.0 / prior.temperature;

  CounterRng rng(seed, kMcmcStream);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (auto& l : labels)
    l = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(q)));

  for (std::int64_t step = 0; step < n_steps; ++step) {
    const Eigen::Index site =
        static_cast<Eigen::Index>(rng.next_below(static_cast<std::uint64_t>(n)));
    const int current = labels[static_cast<std::size_t>(site)];
    const int proposal = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(q)));
    const double u = rng.next_double();

    // Off-diagonal pairs (site, j) and (j, site) flip together; the
    // diagonal term never changes.
    double delta = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == site) continue;
      const int lj = labels[static_cast<std::size_t>(j)];
      if (lj == proposal) delta += k(site, j);
      if (lj == current) delta -= k(site, j);
    }
    delta *= 2.0 * inv_t;
    if (detail::mh_accept(delta, u))
      labels[static_cast<std::size_t>(site)] = proposal;
    if (on_step) on_step(labels);
  }

  Labeling out;
  out.labels = std::move(labels);
  out.q = q;
  out.seed = seed;
  out.temperature = prior.temperature;
  return out;
}

Eigen::MatrixXd one_hot(const Labeling& labeling) {
  const Eigen::Index n = labeling.size();
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, labeling.q);
  for (Eigen::Index i = 0; i < n; ++i)
    y(i, labeling.labels[static_cast<std::size_t>(i)]) = 1.0;
  return y;
}

Eigen::MatrixXd label_graph(const Labeling& labeling) {
  const Eigen::Index n = labeling.size();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (labeling.labels[static_cast<std::size_t>(i)] ==
          labeling.labels[static_cast<std::size_t>(j)])
        g(i, j) = 1.0;
  return g;
}

double alignment_trace(const Eigen::MatrixXd& m, const LabelGraph& g) {
  double trace = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (g.adj(j, i)) trace += m(i, j);
  return trace;
}

}  // namespace taskprior
