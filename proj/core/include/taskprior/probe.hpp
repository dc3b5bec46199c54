#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "taskprior/feature_matrix.hpp"
#include "taskprior/prior.hpp"
#include "taskprior/sampler.hpp"

namespace taskprior {

/// Optimal affine probe for the mean-squared-error objective
///   L(W, b) = (1/N) || F Wᵀ + 1 bᵀ - Y ||_F^2
/// together with the loss it attains.
struct ProbeSolution {
  Eigen::MatrixXd weights;  // C x D
  Eigen::VectorXd bias;     // C
  double train_loss = 0.0;
  Eigen::Index rank_used = 0;
};

/// Linear-probe accuracies over a batch of sampled tasks.
struct ProbeReport {
  std::vector<double> per_task_accuracy;  // completed tasks, task order
  double mean_accuracy = 0.0;
  double accuracy_variance = 0.0;  // population variance of the list
  int n_tasks = 0;                 // completed (skipped excluded)
  int q = 0;
  double temperature = 0.0;
  std::string prior_model_id;
  std::vector<int> skipped_tasks;  // indices of degenerate tasks
  double split = 0.0;
  std::uint64_t seed = 0;
};

/// Minimum of the MSE probe objective, directly from the SVD of the
/// centered features: (1/N) ||H Y||_F^2 - (1/N) || U_kᵀ Y ||_F^2 with U_k
/// the left singular vectors above the rank cutoff 1e-10 * sigma_max.
/// No probe is ever formed.
double closed_form_probe_loss(const FeatureMatrix& features,
                              const Eigen::MatrixXd& y_onehot);

/// Explicit optimal (W, b), pseudo-inverting the feature Gram when rank
/// deficient. train_loss re-evaluates the objective at the solution.
ProbeSolution fit_probe(const FeatureMatrix& features,
                        const Eigen::MatrixXd& y_onehot);

/// Evaluates the probe objective at an arbitrary (W, b).
double probe_loss_at(const FeatureMatrix& features, const Eigen::MatrixXd& y_onehot,
                     const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias);

/// Seeded stratified split, probe fit on the train part, held-out argmax
/// accuracy (ties toward the lowest class index). Throws DegenerateTask
/// when a class ends up absent from the train split or the test split is
/// empty.
double probe_accuracy(const FeatureMatrix& features, const Labeling& labeling,
                      double split, std::uint64_t seed);

/// Draws n_tasks labelings from the prior (derived seeds), probes each,
/// and aggregates. Degenerate tasks are recorded and excluded from the
/// moments.
ProbeReport evaluate_over_tasks(const FeatureMatrix& features,
                                const TaskPrior& prior, int q, int n_tasks,
                                double split, std::uint64_t seed);

}  // namespace taskprior
