#include "taskprior/kernel.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "taskprior/errors.hpp"

namespace taskprior {

namespace {

constexpr double kZeroRowTol = 1e-12;
constexpr double kAsymmetryTol = 1e-9;

// Exactly symmetric Gram matrix G Gᵀ via a rank update on one triangle.
Eigen::MatrixXd symmetric_gram(const Eigen::MatrixXd& g) {
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(g.rows(), g.rows());
  k.selfadjointView<Eigen::Lower>().rankUpdate(g);
  k.triangularView<Eigen::StrictlyUpper>() =
      k.triangularView<Eigen::StrictlyLower>().transpose();
  return k;
}

void check_finite(const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (!std::isfinite(m(i, j))) throw NonFinite(i, j);
}

}  // namespace

const char* to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::centered_cosine:
      return "centered_cosine";
    case KernelKind::linear:
      return "linear";
    case KernelKind::precomputed:
      return "precomputed";
  }
  return "unknown";
}

KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "centered_cosine") return KernelKind::centered_cosine;
  if (name == "linear") return KernelKind::linear;
  if (name == "precomputed") return KernelKind::precomputed;
  throw InvalidArgument("unknown kernel kind '" + name + "'");
}

void center_kernel_in_place(Eigen::MatrixXd& k) {
  const Eigen::VectorXd row_mean = k.rowwise().mean();
  const Eigen::RowVectorXd col_mean = k.colwise().mean();
  const double grand = k.mean();
  k.colwise() -= row_mean;
  k.rowwise() -= col_mean;
  k.array() += grand;
  // Kill centering roundoff asymmetry.
  k = ((k + k.transpose()) * 0.5).eval();
}

KernelMatrix centered_cosine_kernel(const FeatureMatrix& features) {
  const Eigen::Index n = features.n_samples();
  Eigen::MatrixXd g = features.data;

  // Cosine part: each sample becomes a direction.
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = g.row(i).norm();
    if (norm < kZeroRowTol) throw ZeroRow(i);
    g.row(i) /= norm;
  }

  // Centering part: subtracting the mean row applies H on the left, which
  // doubly centers the Gram matrix below.
  const Eigen::RowVectorXd mean_row = g.colwise().mean();
  g.rowwise() -= mean_row;
  for (Eigen::Index i = 0; i < n; ++i)
    if (g.row(i).norm() < kZeroRowTol) throw ZeroRow(i);

  KernelMatrix out;
  out.data = symmetric_gram(g);
  out.centered = true;
  out.factor = std::move(g);
  out.kind = KernelKind::centered_cosine;
  out.source_model_id = features.model_id;
  return out;
}

KernelMatrix linear_kernel(const FeatureMatrix& features) {
  KernelMatrix out;
  out.data = symmetric_gram(features.data);
  out.centered = false;
  out.factor = features.data;
  out.kind = KernelKind::linear;
  out.source_model_id = features.model_id;
  return out;
}

KernelMatrix precomputed_kernel(Eigen::MatrixXd data, bool center,
                                std::string source_model_id) {
  if (data.rows() != data.cols())
    throw NotSquare("precomputed kernel must be square, got " +
                    std::to_string(data.rows()) + "x" +
                    std::to_string(data.cols()));
  check_finite(data);

  KernelMatrix out;
  out.kind = KernelKind::precomputed;
  out.source_model_id = std::move(source_model_id);
  for (Eigen::Index i = 0; i < data.rows() && !out.symmetrized; ++i)
    for (Eigen::Index j = i + 1; j < data.cols(); ++j)
      if (std::abs(data(i, j) - data(j, i)) >
          kAsymmetryTol * std::max(1.0, std::abs(data(i, j)))) {
        out.symmetrized = true;
        break;
      }
  out.data = ((data + data.transpose()) * 0.5).eval();
  if (center) {
    center_kernel_in_place(out.data);
    out.centered = true;
  }
  return out;
}

Eigen::MatrixXd factorize(const KernelMatrix& kernel) {
  const Eigen::Index n = kernel.n();
  if (n == 0) return Eigen::MatrixXd(0, 0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(kernel.data);
  if (eig.info() != Eigen::Success)
    throw InvalidArgument("eigendecomposition failed on kernel of size " +
                          std::to_string(n));
  const Eigen::VectorXd& values = eig.eigenvalues();  // ascending
  const double lambda_max = std::max(0.0, values(n - 1));
  const double cutoff = 1e-10 * lambda_max;

  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (values(i) > cutoff) ++rank;

  Eigen::MatrixXd z(n, rank);
  // Largest eigenvalue first.
  for (Eigen::Index c = 0; c < rank; ++c) {
    const Eigen::Index src = n - 1 - c;
    z.col(c) = eig.eigenvectors().col(src) * std::sqrt(values(src));
  }
  return z;
}

const Eigen::MatrixXd& ensure_factor(KernelMatrix& kernel) {
  if (!kernel.factor) kernel.factor = factorize(kernel);
  return *kernel.factor;
}

KernelMatrix combine_priors(const KernelMatrix& k1, const KernelMatrix& k2) {
  if (k1.n() != k2.n())
    throw ShapeMismatch("cannot combine kernels of size " +
                        std::to_string(k1.n()) + " and " +
                        std::to_string(k2.n()));
  KernelMatrix out;
  out.data = k1.data + k2.data;
  out.centered = k1.centered && k2.centered;
  out.kind = KernelKind::precomputed;
  out.symmetrized = k1.symmetrized || k2.symmetrized;
  if (k1.factor && k2.factor) {
    Eigen::MatrixXd z(k1.n(), k1.factor->cols() + k2.factor->cols());
    z << *k1.factor, *k2.factor;
    out.factor = std::move(z);
  }
  if (!k1.source_model_id.empty() || !k2.source_model_id.empty())
    out.source_model_id = k1.source_model_id + "+" + k2.source_model_id;
  return out;
}

KernelMatrix ssl_prior_graph(Eigen::Index n_samples, Eigen::Index n_views) {
  if (n_samples < 1 || n_views < 1)
    throw InvalidArgument("ssl_prior_graph needs n_samples >= 1 and n_views >= 1");
  const Eigen::Index n = n_samples * n_views;
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, n_samples);
  for (Eigen::Index i = 0; i < n; ++i) y(i, i / n_views) = 1.0;

  KernelMatrix out;
  out.data = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index b = 0; b < n_samples; ++b)
    out.data.block(b * n_views, b * n_views, n_views, n_views).setOnes();
  out.centered = false;
  out.factor = std::move(y);
  out.kind = KernelKind::precomputed;
  out.source_model_id = "ssl";
  return out;
}

}  // namespace taskprior
