#include "taskprior/prior.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <utility>

#include "taskprior/errors.hpp"
#include "taskprior/parallel.hpp"

namespace taskprior {

namespace {

constexpr std::int64_t kRowChunk = 256;  // rows per reduction chunk

void check_same_n(const TaskPrior& prior, const KernelMatrix& m) {
  if (prior.n() != m.n())
    throw ShapeMismatch("prior kernel is " + std::to_string(prior.n()) + "x" +
                        std::to_string(prior.n()) + " but evaluated kernel is " +
                        std::to_string(m.n()) + "x" + std::to_string(m.n()));
}

void check_index(const TaskPrior& prior, Eigen::Index i, Eigen::Index j) {
  if (i < 0 || j < 0 || i >= prior.n() || j >= prior.n())
    throw IndexOutOfRange("edge (" + std::to_string(i) + ", " + std::to_string(j) +
                          ") outside kernel of size " + std::to_string(prior.n()));
}

// Normalizes log-weights into probabilities in place; returns nothing.
// Uses the max-shift form so arbitrary energy scales stay finite.
void normalize_log_weights(std::vector<double>& w) {
  const double shift = *std::max_element(w.begin(), w.end());
  double total = 0.0;
  for (double& v : w) {
    v = std::exp(v - shift);
    total += v;
  }
  for (double& v : w) v /= total;
}

}  // namespace

TaskPrior make_task_prior(KernelMatrix kernel, double temperature) {
  if (!(temperature > 0.0))
    throw InvalidArgument("temperature must be positive, got " +
                          std::to_string(temperature));
  return TaskPrior{std::move(kernel), temperature};
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double edge_probability(const TaskPrior& prior, Eigen::Index i, Eigen::Index j) {
  check_index(prior, i, j);
  return sigmoid(prior.kernel.data(i, j) / prior.temperature);
}

double pair_probability(const TaskPrior& prior, Edge a, Edge b) {
  if (a == b)
    throw SameEdge("pair_probability needs distinct edges; P(G_ij^2 = 1) is just "
                   "edge_probability");
  return edge_probability(prior, a.first, a.second) *
         edge_probability(prior, b.first, b.second);
}

TaskStats trace_stats(const TaskPrior& prior, const KernelMatrix& m,
                      bool include_diagonal) {
  check_same_n(prior, m);
  const Eigen::Index n = prior.n();
  const double inv_t = 1.0 / prior.temperature;
  const Eigen::MatrixXd& k = prior.kernel.data;
  const Eigen::MatrixXd& mm = m.data;

  struct Sums {
    double mean = 0.0;
    double var = 0.0;
  };
  const Sums total = chunked_reduce<Sums>(
      n, kRowChunk,
      [&](std::int64_t begin, std::int64_t end) {
        Sums s;
        for (Eigen::Index i = begin; i < end; ++i) {
          for (Eigen::Index j = 0; j < n; ++j) {
            if (!include_diagonal && i == j) continue;
            const double p = sigmoid(k(i, j) * inv_t);
            const double w = mm(i, j);
            s.mean += w * p;
            s.var += w * w * p * (1.0 - p);
          }
        }
        return s;
      },
      [](Sums a, Sums b) {
        return Sums{a.mean + b.mean, a.var + b.var};
      });

  TaskStats stats;
  stats.mean = total.mean;
  stats.variance = total.var;
  stats.n = n;
  stats.temperature = prior.temperature;
  stats.include_diagonal = include_diagonal;
  return stats;
}

TaskStats expected_trace(const TaskPrior& prior, const KernelMatrix& m,
                         bool include_diagonal) {
  return trace_stats(prior, m, include_diagonal);
}

TaskStats trace_variance(const TaskPrior& prior, const KernelMatrix& m,
                         bool include_diagonal) {
  return trace_stats(prior, m, include_diagonal);
}

double GraphMeasure::edge_marginal(Eigen::Index i, Eigen::Index j) const {
  double p = 0.0;
  for (std::size_t g = 0; g < prob.size(); ++g)
    if (edge_set(g, i, j)) p += prob[g];
  return p;
}

double GraphMeasure::pair_marginal(Edge a, Edge b) const {
  double p = 0.0;
  for (std::size_t g = 0; g < prob.size(); ++g)
    if (edge_set(g, a.first, a.second) && edge_set(g, b.first, b.second))
      p += prob[g];
  return p;
}

double GraphMeasure::expected_trace(const Eigen::MatrixXd& m,
                                    bool include_diagonal) const {
  double mean = 0.0;
  for (std::size_t g = 0; g < prob.size(); ++g) {
    double trace = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!include_diagonal && i == j) continue;
        if (edge_set(g, i, j)) trace += m(i, j);
      }
    mean += prob[g] * trace;
  }
  return mean;
}

double GraphMeasure::trace_variance(const Eigen::MatrixXd& m,
                                    bool include_diagonal) const {
  const double mean = expected_trace(m, include_diagonal);
  double second = 0.0;
  for (std::size_t g = 0; g < prob.size(); ++g) {
    double trace = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!include_diagonal && i == j) continue;
        if (edge_set(g, i, j)) trace += m(i, j);
      }
    second += prob[g] * trace * trace;
  }
  return second - mean * mean;
}

GraphMeasure enumerate_measure(const TaskPrior& prior) {
  const Eigen::Index n = prior.n();
  if (n > 4)
    throw TooLarge("exhaustive graph enumeration is capped at N = 4, got N = " +
                   std::to_string(n));
  const std::size_t bits = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  const std::size_t count = std::size_t{1} << bits;

  // log-weight contribution of each entry bit; Tr(G K) pairs G_ij with K_ji.
  std::vector<double> bit_weight(bits);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      bit_weight[static_cast<std::size_t>(i) * n + j] =
          prior.kernel.data(j, i) / prior.temperature;

  GraphMeasure measure;
  measure.n = n;
  measure.prob.resize(count);
  for (std::size_t g = 0; g < count; ++g) {
    double e = 0.0;
    std::size_t rest = g;
    while (rest) {
      const int b = std::countr_zero(rest);
      e += bit_weight[static_cast<std::size_t>(b)];
      rest &= rest - 1;
    }
    measure.prob[g] = e;
  }
  normalize_log_weights(measure.prob);
  return measure;
}

std::vector<int> LabelingMeasure::decode(std::size_t index) const {
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    labels[static_cast<std::size_t>(i)] = static_cast<int>(index % q);
    index /= q;
  }
  return labels;
}

std::size_t LabelingMeasure::index_of(const std::vector<int>& labels) const {
  std::size_t index = 0;
  for (Eigen::Index i = n - 1; i >= 0; --i)
    index = index * q + static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
  return index;
}

LabelingMeasure restricted_measure(const TaskPrior& prior, int q) {
  if (q < 1) throw InvalidClassCount("need q >= 1, got " + std::to_string(q));
  const Eigen::Index n = prior.n();
  constexpr std::size_t kCap = std::size_t{1} << 20;
  std::size_t count = 1;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (count > kCap / static_cast<std::size_t>(q))
      throw TooLarge("q^N exceeds the 2^20 enumeration cap");
    count *= static_cast<std::size_t>(q);
  }

  const Eigen::MatrixXd& k = prior.kernel.data;
  const double inv_t = 1.0 / prior.temperature;

  LabelingMeasure measure;
  measure.n = n;
  measure.q = q;
  measure.prob.resize(count);
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  for (std::size_t idx = 0; idx < count; ++idx) {
    double e = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)])
          e += k(j, i);
    measure.prob[idx] = e * inv_t;
    // mixed-radix increment
    for (Eigen::Index i = 0; i < n; ++i) {
      int& digit = labels[static_cast<std::size_t>(i)];
      if (++digit < q) break;
      digit = 0;
    }
  }
  normalize_log_weights(measure.prob);
  return measure;
}

}  // namespace taskprior
