#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <vector>

#include "taskprior/feature_matrix.hpp"
#include "taskprior/kernel.hpp"
#include "taskprior/prior.hpp"
#include "taskprior/probe.hpp"
#include "taskprior/sampler.hpp"

namespace taskprior {

enum class FeatureFormat { npy, csv };

FeatureFormat feature_format_from_string(const std::string& name);
const char* to_string(FeatureFormat format);

/// Infers npy/csv from the file extension; anything else is an error.
FeatureFormat guess_format(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Arrays. The binary format is NPY v1.0 restricted to little-endian
// float32/float64, 2-D, C-order; anything else is rejected with a precise
// error. Writes always emit '<f8'.

Eigen::MatrixXd load_npy_matrix(const std::filesystem::path& path);
void save_npy_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);

/// CSV: UTF-8, comma separated, '.' decimal point regardless of locale.
/// A header is detected when the first line does not parse as numbers;
/// when its first field is exactly `id`, that column supplies sample ids.
FeatureMatrix load_features_csv(const std::filesystem::path& path,
                                std::string model_id);

FeatureMatrix load_features(const std::filesystem::path& path, FeatureFormat format,
                            std::string model_id = "");

// ---------------------------------------------------------------------------
// Kernel persistence: the matrix as NPY plus a `kernel_meta` JSON sidecar
// (same stem, `.meta.json` extension) with kind, centered flag and source.

std::filesystem::path kernel_meta_path(const std::filesystem::path& npy_path);
void save_kernel(const std::filesystem::path& npy_path, const KernelMatrix& kernel);
KernelMatrix load_kernel(const std::filesystem::path& npy_path);

// ---------------------------------------------------------------------------
// Reports. Every document is
//   { "schema_version": 1, "kind": ..., "params": {...}, "payload": {...} }
// serialized with sorted keys and a fixed indentation, so identical
// inputs produce byte-identical files.

void save_report(const std::filesystem::path& path, const TaskStats& stats,
                 KernelKind kernel = KernelKind::centered_cosine,
                 const std::string& prior_model_id = "",
                 const std::string& model_id = "");
void save_report(const std::filesystem::path& path, const Labeling& labeling,
                 KernelKind kernel = KernelKind::centered_cosine,
                 const std::string& prior_model_id = "");
void save_report(const std::filesystem::path& path, const ProbeReport& report,
                 KernelKind kernel = KernelKind::centered_cosine);

TaskStats load_task_stats(const std::filesystem::path& path);
Labeling load_labeling(const std::filesystem::path& path);
ProbeReport load_probe_report(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Dataset manifests: a JSON list of feature files that share one sample
// order. Relative paths resolve against the manifest's directory.

struct ManifestEntry {
  std::string model_id;
  std::filesystem::path path;
  FeatureFormat format = FeatureFormat::npy;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> sample_ids;  // filled once features are loaded
};

DatasetManifest load_manifest(const std::filesystem::path& path);

/// Loads every entry and enforces the shared sample order: equal N
/// everywhere, and equal id sequences wherever both files carry explicit
/// ids. Fills `manifest.sample_ids` from the first entry.
std::vector<FeatureMatrix> load_manifest_features(DatasetManifest& manifest);

}  // namespace taskprior
