#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "taskprior/taskprior.hpp"

namespace fs = std::filesystem;
using namespace taskprior;

namespace {

struct RunConfig {
  std::string prior_path;
  std::string model_path;
  std::string manifest_path;
  std::string prior_model_id;
  std::string output_path;
  std::string csv_path;
  std::string save_kernel_path;
  std::string kernel_name = "centered_cosine";
  double temperature = kDefaultTemperature;
  int q = 2;
  int n_tasks = 100;
  double split = 0.8;
  std::uint64_t seed = 0;
  bool include_diagonal = true;
  bool shuffle = false;
  bool precomputed = false;
  int threads = 0;
};

void validate(const RunConfig& config) {
  if (!(config.temperature > 0.0))
    throw InvalidArgument("temperature must be positive");
  if (config.q < 1) throw InvalidArgument("--classes must be at least 1");
  if (!(config.split > 0.0 && config.split < 1.0))
    throw InvalidArgument("--split must lie strictly between 0 and 1");
  if (config.n_tasks < 1) throw InvalidArgument("--n-tasks must be at least 1");
}

KernelMatrix kernel_from_file(const std::string& path, const RunConfig& config) {
  if (config.precomputed) {
    const fs::path p{path};
    return precomputed_kernel(load_npy_matrix(p), /*center=*/false,
                              p.stem().string());
  }
  const FeatureMatrix features = load_features(path, guess_format(path));
  return kernel_kind_from_string(config.kernel_name) == KernelKind::linear
             ? linear_kernel(features)
             : centered_cosine_kernel(features);
}

int cmd_analyze(const RunConfig& config) {
  validate(config);
  KernelMatrix prior_kernel = kernel_from_file(config.prior_path, config);
  KernelMatrix model_kernel = kernel_from_file(config.model_path, config);
  if (prior_kernel.n() != model_kernel.n())
    throw ShapeMismatch("sample count mismatch: " + config.prior_path + " has N=" +
                        std::to_string(prior_kernel.n()) + ", " + config.model_path +
                        " has N=" + std::to_string(model_kernel.n()));

  if (!config.save_kernel_path.empty())
    save_kernel(config.save_kernel_path, prior_kernel);

  const std::string prior_id = prior_kernel.source_model_id;
  const std::string model_id = model_kernel.source_model_id;
  const TaskPrior prior =
      make_task_prior(std::move(prior_kernel), config.temperature);
  const TaskStats stats =
      trace_stats(prior, model_kernel, config.include_diagonal);

  std::cout << "n                " << stats.n << "\n"
            << "temperature      " << stats.temperature << "\n"
            << "include_diagonal " << (stats.include_diagonal ? "true" : "false")
            << "\n"
            << "mean             " << stats.mean << "\n"
            << "variance         " << stats.variance << "\n";
  if (!config.output_path.empty())
    save_report(config.output_path, stats,
                kernel_kind_from_string(config.kernel_name), prior_id, model_id);
  return 0;
}

int cmd_sample(const RunConfig& config) {
  validate(config);
  KernelMatrix prior_kernel = kernel_from_file(config.prior_path, config);
  ensure_factor(prior_kernel);
  const std::string prior_id = prior_kernel.source_model_id;
  const TaskPrior prior =
      make_task_prior(std::move(prior_kernel), config.temperature);

  PrefixOptions options;
  options.shuffle = config.shuffle;
  const Labeling labeling = prefix_sample(prior, config.q, config.seed, options);

  std::cout << "n      " << labeling.labels.size() << "\n"
            << "q      " << labeling.q << "\n"
            << "seed   " << labeling.seed << "\n";
  if (!config.output_path.empty())
    save_report(config.output_path, labeling,
                kernel_kind_from_string(config.kernel_name), prior_id);
  return 0;
}

int cmd_probe_eval(const RunConfig& config) {
  validate(config);
  KernelMatrix prior_kernel = kernel_from_file(config.prior_path, config);
  ensure_factor(prior_kernel);
  const TaskPrior prior =
      make_task_prior(std::move(prior_kernel), config.temperature);
  const FeatureMatrix features =
      load_features(config.model_path, guess_format(config.model_path));
  if (features.n_samples() != prior.n())
    throw ShapeMismatch("sample count mismatch: " + config.prior_path + " has N=" +
                        std::to_string(prior.n()) + ", " + config.model_path +
                        " has N=" + std::to_string(features.n_samples()));

  const ProbeReport report = evaluate_over_tasks(
      features, prior, config.q, config.n_tasks, config.split, config.seed);
  std::cout << "tasks_completed   " << report.n_tasks << "\n"
            << "tasks_skipped     " << report.skipped_tasks.size() << "\n"
            << "mean_accuracy     " << report.mean_accuracy << "\n"
            << "accuracy_variance " << report.accuracy_variance << "\n";
  if (!config.output_path.empty())
    save_report(config.output_path, report,
                kernel_kind_from_string(config.kernel_name));
  return 0;
}

int cmd_compare(const RunConfig& config) {
  validate(config);
  DatasetManifest manifest = load_manifest(config.manifest_path);

  CompareOptions options;
  options.temperature = config.temperature;
  options.q = config.q;
  options.n_tasks = config.n_tasks;
  options.split = config.split;
  options.seed = config.seed;
  options.include_diagonal = config.include_diagonal;
  options.kernel = kernel_kind_from_string(config.kernel_name);

  const ComparisonReport report =
      compare_models(std::move(manifest), config.prior_model_id, options);

  std::cout << "model_id            closed_mean     probe_mean\n";
  for (const ModelRow& row : report.rows)
    std::cout << row.model_id << (row.is_prior ? " [prior]" : "") << "  "
              << row.stats.mean << "  " << row.probe.mean_accuracy << "\n";
  if (report.mean_correlation.defined)
    std::cout << "pearson(closed mean, probe mean) = " << report.mean_correlation.r
              << "\n";
  else
    std::cout << "pearson(closed mean, probe mean) undefined: "
              << report.mean_correlation.reason << "\n";

  if (!config.output_path.empty()) save_report(config.output_path, report);
  if (!config.csv_path.empty()) save_comparison_csv(config.csv_path, report);
  return 0;
}

void add_common_options(CLI::App* cmd, RunConfig& config) {
  cmd->add_option("-T,--temperature", config.temperature,
                  "Gibbs temperature of the task prior")
      ->capture_default_str();
  cmd->add_option("--seed", config.seed, "RNG seed")->capture_default_str();
  cmd->add_option("--kernel", config.kernel_name,
                  "Kernel construction: centered_cosine or linear")
      ->capture_default_str();
  cmd->add_option("--threads", config.threads,
                  "Worker threads for closed-form sums (0 = auto)")
      ->envname("TASKPRIOR_THREADS")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "taskprior: evaluate representation models over a distribution of tasks"};
  app.require_subcommand(1);

  RunConfig config;

  CLI::App* analyze = app.add_subcommand(
      "analyze", "Closed-form mean/variance of the alignment Tr(MG) of a model "
                 "kernel with graphs drawn from a task prior");
  analyze->add_option("--prior", config.prior_path,
                      "Feature file (.npy/.csv) defining the prior kernel")
      ->required();
  analyze->add_option("--model", config.model_path,
                      "Feature file of the model under evaluation")
      ->required();
  analyze->add_option("-o,--output", config.output_path, "Output task_stats JSON");
  analyze->add_flag("--precomputed", config.precomputed,
                    "Treat inputs as precomputed N x N kernels");
  analyze
      ->add_option("--include-diagonal", config.include_diagonal,
                   "Include i == j terms in the sums")
      ->capture_default_str();
  analyze->add_option("--save-kernel", config.save_kernel_path,
                      "Also persist the prior kernel (NPY + meta sidecar)");
  add_common_options(analyze, config);

  CLI::App* sample = app.add_subcommand(
      "sample", "Draw a labeling from the task prior with the prefix sampler");
  sample->add_option("--prior", config.prior_path,
                     "Feature file (.npy/.csv) defining the prior kernel")
      ->required();
  sample->add_option("-q,--classes", config.q, "Number of classes")
      ->capture_default_str();
  sample->add_option("-o,--output", config.output_path, "Output labeling JSON");
  sample->add_flag("--shuffle", config.shuffle,
                   "Visit samples in a seeded random order");
  sample->add_flag("--precomputed", config.precomputed,
                   "Treat the prior as a precomputed N x N kernel");
  add_common_options(sample, config);

  CLI::App* probe_eval = app.add_subcommand(
      "probe-eval", "Linear-probe accuracy of one model over sampled tasks");
  probe_eval->add_option("--prior", config.prior_path, "Prior feature file")
      ->required();
  probe_eval->add_option("--model", config.model_path, "Evaluated feature file")
      ->required();
  probe_eval->add_option("-q,--classes", config.q, "Number of classes")
      ->capture_default_str();
  probe_eval->add_option("--n-tasks", config.n_tasks, "Number of sampled tasks")
      ->capture_default_str();
  probe_eval->add_option("--split", config.split, "Train fraction of each class")
      ->capture_default_str();
  probe_eval->add_option("-o,--output", config.output_path,
                         "Output probe_report JSON");
  probe_eval->add_flag("--precomputed", config.precomputed,
                       "Treat the prior as a precomputed N x N kernel");
  add_common_options(probe_eval, config);

  CLI::App* compare = app.add_subcommand(
      "compare", "Compare every model in a manifest against one prior");
  compare->add_option("--manifest", config.manifest_path, "Manifest JSON file")
      ->required();
  compare->add_option("--prior-model", config.prior_model_id,
                      "model_id inside the manifest that defines the prior")
      ->required();
  compare->add_option("-q,--classes", config.q, "Number of classes")
      ->capture_default_str();
  compare->add_option("--n-tasks", config.n_tasks, "Number of sampled tasks")
      ->capture_default_str();
  compare->add_option("--split", config.split, "Train fraction of each class")
      ->capture_default_str();
  compare
      ->add_option("--include-diagonal", config.include_diagonal,
                   "Include i == j terms in the closed-form sums")
      ->capture_default_str();
  compare->add_option("-o,--output", config.output_path,
                      "Output comparison_report JSON");
  compare->add_option("--csv", config.csv_path, "Optional flat CSV (row per model)");
  add_common_options(compare, config);

  CLI11_PARSE(app, argc, argv);

  set_max_threads(config.threads);
  try {
    if (analyze->parsed()) return cmd_analyze(config);
    if (sample->parsed()) return cmd_sample(config);
    if (probe_eval->parsed()) return cmd_probe_eval(config);
    if (compare->parsed()) return cmd_compare(config);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
