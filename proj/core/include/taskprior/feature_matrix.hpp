#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace taskprior {

/// Backbone embeddings for one dataset: one row per sample, one column
/// per embedding dimension. All arithmetic downstream is double precision
/// regardless of the precision the features were stored in.
struct FeatureMatrix {
  Eigen::MatrixXd data;                  // N x D
  std::vector<std::string> sample_ids;   // size N, unique, row-aligned
  std::string model_id;
  bool explicit_ids = false;  // ids came from the file, not row indices

  Eigen::Index n_samples() const { return data.rows(); }
  Eigen::Index dim() const { return data.cols(); }
};

/// Validates and wraps a raw matrix: N >= 2, D >= 1, all entries finite,
/// ids unique and row-aligned. Empty `ids` get replaced by row indices.
FeatureMatrix make_feature_matrix(Eigen::MatrixXd data, std::string model_id,
                                  std::vector<std::string> ids = {});

}  // namespace taskprior
