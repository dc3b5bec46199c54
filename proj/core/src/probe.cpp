#include "taskprior/probe.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "taskprior/errors.hpp"
#include "taskprior/rng.hpp"

namespace taskprior {

namespace {

constexpr double kRankCutoff = 1e-10;  // relative to sigma_max

struct ThinSvd {
  Eigen::MatrixXd u;        // N x k
  Eigen::VectorXd sigma;    // k
  Eigen::MatrixXd v;        // D x k
  Eigen::Index rank = 0;
};

// Thin SVD of the sample-centered features, truncated at the rank cutoff.
ThinSvd centered_svd(const Eigen::MatrixXd& features) {
  Eigen::MatrixXd centered = features;
  centered.rowwise() -= features.colwise().mean();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& values = svd.singularValues();
  const double cutoff = values.size() > 0 ? kRankCutoff * values(0) : 0.0;
  Eigen::Index rank = 0;
  while (rank < values.size() && values(rank) > cutoff) ++rank;

  ThinSvd out;
  out.u = svd.matrixU().leftCols(rank);
  out.sigma = values.head(rank);
  out.v = svd.matrixV().leftCols(rank);
  out.rank = rank;
  return out;
}

void check_same_rows(const FeatureMatrix& features, const Eigen::MatrixXd& y) {
  if (features.n_samples() != y.rows())
    throw ShapeMismatch("features have " + std::to_string(features.n_samples()) +
                        " rows but targets have " + std::to_string(y.rows()));
}

int argmax_lowest(const Eigen::VectorXd& scores) {
  int best = 0;
  for (int c = 1; c < scores.size(); ++c)
    if (scores(c) > scores(best)) best = c;
  return best;
}

}  // namespace

double closed_form_probe_loss(const FeatureMatrix& features,
                              const Eigen::MatrixXd& y_onehot) {
  check_same_rows(features, y_onehot);
  const double n = static_cast<double>(features.n_samples());
  const ThinSvd svd = centered_svd(features.data);

  Eigen::MatrixXd y_centered = y_onehot;
  y_centered.rowwise() -= y_onehot.colwise().mean();

  const double target_energy = y_centered.squaredNorm();
  const double captured = (svd.u.transpose() * y_centered).squaredNorm();
  return (target_energy - captured) / n;
}

ProbeSolution fit_probe(const FeatureMatrix& features,
                        const Eigen::MatrixXd& y_onehot) {
  check_same_rows(features, y_onehot);
  const ThinSvd svd = centered_svd(features.data);

  Eigen::MatrixXd y_centered = y_onehot;
  y_centered.rowwise() -= y_onehot.colwise().mean();

  ProbeSolution solution;
  // W = Ycᵀ U S⁻¹ Vᵀ: the pseudo-inverse solution of the centered
  // normal equations, valid whether or not the Gram matrix is invertible.
  solution.weights = (y_centered.transpose() * svd.u) *
                     svd.sigma.cwiseInverse().asDiagonal() * svd.v.transpose();
  const Eigen::VectorXd feature_mean = features.data.colwise().mean().transpose();
  const Eigen::VectorXd target_mean = y_onehot.colwise().mean().transpose();
  solution.bias = target_mean - solution.weights * feature_mean;
  solution.rank_used = svd.rank;
  solution.train_loss =
      probe_loss_at(features, y_onehot, solution.weights, solution.bias);
  return solution;
}

double probe_loss_at(const FeatureMatrix& features, const Eigen::MatrixXd& y_onehot,
                     const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias) {
  check_same_rows(features, y_onehot);
  Eigen::MatrixXd residual = features.data * weights.transpose();
  residual.rowwise() += bias.transpose();
  residual -= y_onehot;
  return residual.squaredNorm() / static_cast<double>(features.n_samples());
}

double probe_accuracy(const FeatureMatrix& features, const Labeling& labeling,
                      double split, std::uint64_t seed) {
  const Eigen::Index n = features.n_samples();
  if (labeling.size() != n)
    throw ShapeMismatch("labeling has " + std::to_string(labeling.size()) +
                        " entries for " + std::to_string(n) + " samples");
  if (!(split > 0.0 && split < 1.0))
    throw InvalidArgument("split fraction must be in (0, 1), got " +
                          std::to_string(split));
  const int q = labeling.q;
  if (q < 1) throw InvalidClassCount("labeling has q = " + std::to_string(q));
  for (const int l : labeling.labels)
    if (l < 0 || l >= q)
      throw InvalidArgument("label " + std::to_string(l) + " outside [0, " +
                            std::to_string(q) + ")");

  // Stratified split: shuffle each class's indices with its own stream and
  // cut at the split fraction.
  std::vector<std::vector<Eigen::Index>> by_class(static_cast<std::size_t>(q));
  for (Eigen::Index i = 0; i < n; ++i)
    by_class[static_cast<std::size_t>(labeling.labels[static_cast<std::size_t>(i)])]
        .push_back(i);

  std::vector<Eigen::Index> train_rows, test_rows;
  for (int c = 0; c < q; ++c) {
    auto& rows = by_class[static_cast<std::size_t>(c)];
    if (rows.empty()) continue;  // class unused by this labeling
    CounterRng rng(seed, static_cast<std::uint64_t>(c));
    for (std::size_t i = rows.size() - 1; i > 0; --i)
      std::swap(rows[i], rows[rng.next_below(i + 1)]);
    const auto n_train =
        static_cast<std::size_t>(split * static_cast<double>(rows.size()));
    if (n_train == 0)
      throw DegenerateTask("class " + std::to_string(c) +
                           " has no training samples at split " +
                           std::to_string(split));
    train_rows.insert(train_rows.end(), rows.begin(),
                      rows.begin() + static_cast<std::ptrdiff_t>(n_train));
    test_rows.insert(test_rows.end(),
                     rows.begin() + static_cast<std::ptrdiff_t>(n_train),
                     rows.end());
  }
  if (test_rows.empty()) throw DegenerateTask("test split is empty");

  FeatureMatrix train;
  train.data.resize(static_cast<Eigen::Index>(train_rows.size()), features.dim());
  Eigen::MatrixXd train_y =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(train_rows.size()), q);
  for (std::size_t r = 0; r < train_rows.size(); ++r) {
    train.data.row(static_cast<Eigen::Index>(r)) = features.data.row(train_rows[r]);
    train_y(static_cast<Eigen::Index>(r),
            labeling.labels[static_cast<std::size_t>(train_rows[r])]) = 1.0;
  }

  const ProbeSolution probe = fit_probe(train, train_y);

  Eigen::Index correct = 0;
  for (const Eigen::Index row : test_rows) {
    const Eigen::VectorXd scores =
        probe.weights * features.data.row(row).transpose() + probe.bias;
    if (argmax_lowest(scores) == labeling.labels[static_cast<std::size_t>(row)])
      ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test_rows.size());
}

ProbeReport evaluate_over_tasks(const FeatureMatrix& features,
                                const TaskPrior& prior, int q, int n_tasks,
                                double split, std::uint64_t seed) {
  if (n_tasks < 1)
    throw InvalidArgument("need n_tasks >= 1, got " + std::to_string(n_tasks));

  ProbeReport report;
  report.q = q;
  report.temperature = prior.temperature;
  report.prior_model_id = prior.kernel.source_model_id;
  report.split = split;
  report.seed = seed;

  for (int t = 0; t < n_tasks; ++t) {
    const Labeling task =
        prefix_sample(prior, q, derived_seed(seed, 2 * static_cast<std::uint64_t>(t)));
    try {
      report.per_task_accuracy.push_back(probe_accuracy(
          features, task, split,
          derived_seed(seed, 2 * static_cast<std::uint64_t>(t) + 1)));
    } catch (const DegenerateTask&) {
      report.skipped_tasks.push_back(t);
    }
  }

  report.n_tasks = static_cast<int>(report.per_task_accuracy.size());
  if (report.n_tasks > 0) {
    const double sum = std::accumulate(report.per_task_accuracy.begin(),
                                       report.per_task_accuracy.end(), 0.0);
    report.mean_accuracy = sum / report.n_tasks;
    double ss = 0.0;
    for (const double a : report.per_task_accuracy) {
      const double d = a - report.mean_accuracy;
      ss += d * d;
    }
    report.accuracy_variance = ss / report.n_tasks;
  }
  return report;
}

}  // namespace taskprior
