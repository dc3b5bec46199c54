#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>

#include "taskprior/feature_matrix.hpp"

namespace taskprior {

enum class KernelKind { centered_cosine, linear, precomputed };

const char* to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

/// N x N symmetric similarity matrix, optionally doubly centered and
/// optionally carrying a low-rank factor Z with K = Z Zᵀ.
struct KernelMatrix {
  Eigen::MatrixXd data;
  bool centered = false;
  std::optional<Eigen::MatrixXd> factor;  // N x r
  KernelKind kind = KernelKind::precomputed;
  std::string source_model_id;
  bool symmetrized = false;  // input was measurably asymmetric and got averaged

  Eigen::Index n() const { return data.rows(); }
};

/// Doubly centered cosine similarity: rows are L2-normalized, the mean
/// row is subtracted (which centers the kernel on both sides), and
/// K = G Gᵀ for the explicitly available G, which is stored as the
/// factor. Throws ZeroRow when a raw or centered row has norm < 1e-12.
KernelMatrix centered_cosine_kernel(const FeatureMatrix& features);

/// Plain Gram matrix K = F Fᵀ of the raw features; the factor is F itself.
KernelMatrix linear_kernel(const FeatureMatrix& features);

/// Wraps an externally supplied square matrix. Asymmetry is averaged away
/// ((K + Kᵀ)/2) and flagged, not rejected. `center` applies H K H.
KernelMatrix precomputed_kernel(Eigen::MatrixXd data, bool center,
                                std::string source_model_id = "");

/// PSD-projected factorization: eigenvalues are clipped at zero, those
/// below 1e-10 * lambda_max are dropped, and Z = V sqrt(Lambda). Total on
/// symmetric finite input; returns an N x 0 matrix for K <= 0.
Eigen::MatrixXd factorize(const KernelMatrix& kernel);

/// Computes and caches the factor if absent; returns it.
const Eigen::MatrixXd& ensure_factor(KernelMatrix& kernel);

/// Elementwise sum. The product of the two Gibbs measures is the measure
/// of the sum, so this composes priors from multiple backbones. Factors
/// concatenate; the result is flagged centered only if both inputs are.
KernelMatrix combine_priors(const KernelMatrix& k1, const KernelMatrix& k2);

/// Block-diagonal view graph: n_samples blocks of n_views x n_views ones.
/// Each sample is its own class, collapsed across its augmented views;
/// usable directly as an uncentered prior kernel. The exact factor Y
/// (one-hot sample membership) is attached.
KernelMatrix ssl_prior_graph(Eigen::Index n_samples, Eigen::Index n_views);

/// In-place double centering K <- H K H with H = I - (1/N) 11ᵀ.
void center_kernel_in_place(Eigen::MatrixXd& k);

}  // namespace taskprior
