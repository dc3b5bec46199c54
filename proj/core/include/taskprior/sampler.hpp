#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <vector>

#include "taskprior/prior.hpp"

namespace taskprior {

/// A sampled classification task: one class id per sample.
struct Labeling {
  std::vector<int> labels;  // size N, values in [0, q)
  int q = 0;
  std::uint64_t seed = 0;
  double temperature = 0.0;
  bool shuffled = false;

  Eigen::Index size() const { return static_cast<Eigen::Index>(labels.size()); }
};

/// A realized binary label graph.
struct LabelGraph {
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> adj;
  std::uint64_t seed = 0;
  double temperature = 0.0;
};

struct PrefixOptions {
  bool shuffle = false;  // visit samples in a seeded random order
};

/// Instrumentation for the prefix sampler: the categorical distribution
/// actually used at every step, the visiting order, and the final
/// class-wise prefix-sum matrix U (r x q).
struct PrefixTrace {
  std::vector<Eigen::VectorXd> step_probabilities;
  std::vector<Eigen::Index> order;
  Eigen::MatrixXd prefix_sums;
};

/// O(N r q) sequential sampler. Walks the samples once keeping class-wise
/// prefix sums U of the kernel factor rows; sample i draws its class from
/// softmax((1/T) Z_i U). Targets the sequential approximation of the
/// restricted measure, not the restricted measure itself. Deterministic
/// given the seed; each sample index owns an independent RNG stream.
/// Throws MissingFactor when the prior kernel has no factor.
Labeling prefix_sample(const TaskPrior& prior, int q, std::uint64_t seed,
                       const PrefixOptions& options = {},
                       PrefixTrace* trace = nullptr);

/// Direct draw from the unrestricted prior: every entry of G is an
/// independent Bernoulli with success probability sigmoid(K_ij / T).
LabelGraph bernoulli_graph_sample(const TaskPrior& prior, std::uint64_t seed);

/// Single-site Metropolis-Hastings on labelings with stationary
/// distribution proportional to exp(Tr(Y Yᵀ K) / T). The proposal
/// resamples one site's label uniformly (possibly onto itself, which is
/// always accepted); the trace delta is computed incrementally in O(N).
/// `on_step`, when set, observes the state after every step.
Labeling mcmc_sample(const TaskPrior& prior, int q, std::int64_t n_steps,
                     std::uint64_t seed,
                     const std::function<void(const std::vector<int>&)>& on_step = {});

namespace detail {
/// Metropolis acceptance rule, exposed for direct testing.
inline bool mh_accept(double log_ratio, double u) {
  return log_ratio >= 0.0 || u < std::exp(log_ratio);
}
}  // namespace detail

/// N x q one-hot matrix of a labeling.
Eigen::MatrixXd one_hot(const Labeling& labeling);

/// The induced label graph Y Yᵀ (entries 1 where labels agree).
Eigen::MatrixXd label_graph(const Labeling& labeling);

/// Literal alignment score Tr(M G) of a model kernel with a realized graph.
double alignment_trace(const Eigen::MatrixXd& m, const LabelGraph& g);

}  // namespace taskprior
