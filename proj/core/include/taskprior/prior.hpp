#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "taskprior/kernel.hpp"

namespace taskprior {

inline constexpr double kDefaultTemperature = 0.01;

/// Gibbs measure over binary label graphs: mu(G) proportional to
/// exp(Tr(G K) / T). Every one of the N^2 entries of G is a free
/// independent Bernoulli variable.
struct TaskPrior {
  KernelMatrix kernel;
  double temperature = kDefaultTemperature;

  Eigen::Index n() const { return kernel.n(); }
};

/// Validates temperature > 0.
TaskPrior make_task_prior(KernelMatrix kernel, double temperature);

/// Closed-form mean and variance of the alignment score Tr(M G) under a
/// task prior. `include_diagonal` says whether i == j terms entered the
/// sums; for one-hot tasks the diagonal carries no task information.
struct TaskStats {
  double mean = 0.0;
  double variance = 0.0;
  Eigen::Index n = 0;
  double temperature = 0.0;
  bool include_diagonal = true;
};

/// Numerically stable logistic function; never NaN, saturates smoothly.
double sigmoid(double x);

using Edge = std::pair<Eigen::Index, Eigen::Index>;

/// P(G_ij = 1) = sigmoid(K_ij / T).
double edge_probability(const TaskPrior& prior, Eigen::Index i, Eigen::Index j);

/// P(G_ij = 1 and G_lk = 1) for distinct edges; the per-edge measures are
/// independent so this is the product of the marginals. Throws SameEdge
/// when the edges coincide.
double pair_probability(const TaskPrior& prior, Edge a, Edge b);

/// Mean and variance of Tr(M G), each an exact O(N^2) sum:
///   E   = sum_ij M_ij sigmoid(K_ij / T)
///   Var = sum_ij M_ij^2 sigmoid(K_ij / T) (1 - sigmoid(K_ij / T))
/// Both are computed in one pass; expected_trace / trace_variance are the
/// individually named entry points.
TaskStats trace_stats(const TaskPrior& prior, const KernelMatrix& m,
                      bool include_diagonal = true);
TaskStats expected_trace(const TaskPrior& prior, const KernelMatrix& m,
                         bool include_diagonal = true);
TaskStats trace_variance(const TaskPrior& prior, const KernelMatrix& m,
                         bool include_diagonal = true);

/// Exact distribution over all 2^(N^2) binary graphs, N <= 4. Graph g is
/// encoded bitwise with entry (i, j) at bit i*N + j.
struct GraphMeasure {
  Eigen::Index n = 0;
  std::vector<double> prob;  // size 2^(n*n), sums to 1

  bool edge_set(std::size_t graph, Eigen::Index i, Eigen::Index j) const {
    return (graph >> (static_cast<std::size_t>(i) * n + j)) & 1u;
  }
  double edge_marginal(Eigen::Index i, Eigen::Index j) const;
  double pair_marginal(Edge a, Edge b) const;
  double expected_trace(const Eigen::MatrixXd& m, bool include_diagonal) const;
  double trace_variance(const Eigen::MatrixXd& m, bool include_diagonal) const;
};

GraphMeasure enumerate_measure(const TaskPrior& prior);

/// Exact restricted measure over q-class labelings (graphs G = Y Yᵀ),
/// i.e. the Potts model induced by the prior. Labeling y is encoded in
/// mixed radix: index = sum_i y_i * q^i. Capped at q^N <= 2^20.
struct LabelingMeasure {
  Eigen::Index n = 0;
  int q = 0;
  std::vector<double> prob;  // size q^n, sums to 1

  std::vector<int> decode(std::size_t index) const;
  std::size_t index_of(const std::vector<int>& labels) const;
};

LabelingMeasure restricted_measure(const TaskPrior& prior, int q);

}  // namespace taskprior
