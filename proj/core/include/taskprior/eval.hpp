#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "taskprior/io.hpp"
#include "taskprior/prior.hpp"
#include "taskprior/probe.hpp"

namespace taskprior {

/// Pearson correlation with a Fisher-transform 95% confidence interval.
/// Undefined (with a reason) when fewer than two points or a zero-variance
/// side; the interval needs at least four points.
struct Correlation {
  bool defined = false;
  double r = 0.0;
  bool ci_defined = false;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int n = 0;
  std::string reason;  // set when something is undefined
};

Correlation pearson_with_fisher_ci(std::span<const double> x,
                                   std::span<const double> y);

/// One evaluated model: closed-form alignment stats under the prior (both
/// diagonal conventions) and the sampled-task probe report.
struct ModelRow {
  std::string model_id;
  bool is_prior = false;
  TaskStats stats;      // include_diagonal per options
  TaskStats stats_alt;  // the complementary diagonal convention
  ProbeReport probe;
};

struct CompareOptions {
  double temperature = kDefaultTemperature;
  int q = 2;
  int n_tasks = 100;
  double split = 0.8;
  std::uint64_t seed = 0;
  bool include_diagonal = true;
  KernelKind kernel = KernelKind::centered_cosine;
};

/// Model-zoo comparison against one prior: per-model closed-form stats
/// and probe reports over a shared batch of sampled tasks, plus the
/// cross-model correlations (prior's own row excluded from those).
struct ComparisonReport {
  std::vector<ModelRow> rows;
  Correlation mean_correlation;      // closed-form mean vs probe mean
  Correlation variance_correlation;  // closed-form variance vs probe variance
  std::string prior_model_id;
  CompareOptions options;
};

/// In-memory variant: features must share one sample order already.
ComparisonReport compare_models(const std::vector<FeatureMatrix>& features,
                                const std::string& prior_model_id,
                                const CompareOptions& options = {});

/// Loads the manifest's feature files, validates alignment, and compares.
ComparisonReport compare_models(DatasetManifest manifest,
                                const std::string& prior_model_id,
                                const CompareOptions& options = {});

void save_report(const std::filesystem::path& path, const ComparisonReport& report);
ComparisonReport load_comparison_report(const std::filesystem::path& path);

/// One row per model, for plotting tools.
void save_comparison_csv(const std::filesystem::path& path,
                         const ComparisonReport& report);

}  // namespace taskprior
