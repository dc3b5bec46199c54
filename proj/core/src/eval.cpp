#include "taskprior/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "taskprior/errors.hpp"

namespace taskprior {

using nlohmann::json;

Correlation pearson_with_fisher_ci(std::span<const double> x,
                                   std::span<const double> y) {
  Correlation out;
  out.n = static_cast<int>(x.size());
  if (x.size() != y.size())
    throw ShapeMismatch("correlation inputs differ in length");
  if (out.n < 2) {
    out.reason = "need at least two points";
    return out;
  }

  double mx = 0.0, my = 0.0;
  for (int i = 0; i < out.n; ++i) {
    mx += x[static_cast<std::size_t>(i)];
    my += y[static_cast<std::size_t>(i)];
  }
  mx /= out.n;
  my /= out.n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (int i = 0; i < out.n; ++i) {
    const double dx = x[static_cast<std::size_t>(i)] - mx;
    const double dy = y[static_cast<std::size_t>(i)] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    out.reason = "zero variance on one side";
    return out;
  }
  out.defined = true;
  out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);

  if (out.n < 4) {
    out.reason = "need at least four points for a Fisher interval";
    return out;
  }
  // Fisher z-transform with a 1.96 / sqrt(n - 3) half-width. The interval
  // must bracket the point estimate even when rounding at |r| = 1 bites.
  const double eps = 1e-15;
  const double z = std::atanh(std::clamp(out.r, -1.0 + eps, 1.0 - eps));
  const double half = 1.959963984540054 / std::sqrt(static_cast<double>(out.n - 3));
  out.ci_defined = true;
  out.ci_low = std::min(std::tanh(z - half), out.r);
  out.ci_high = std::max(std::tanh(z + half), out.r);
  return out;
}

ComparisonReport compare_models(const std::vector<FeatureMatrix>& features,
                                const std::string& prior_model_id,
                                const CompareOptions& options) {
  const auto prior_it =
      std::find_if(features.begin(), features.end(), [&](const FeatureMatrix& f) {
        return f.model_id == prior_model_id;
      });
  if (prior_it == features.end())
    throw MissingModel("prior model '" + prior_model_id + "' not in manifest");

  auto build_kernel = [&](const FeatureMatrix& f) {
    return options.kernel == KernelKind::linear ? linear_kernel(f)
                                                : centered_cosine_kernel(f);
  };

  KernelMatrix prior_kernel = build_kernel(*prior_it);
  ensure_factor(prior_kernel);
  const TaskPrior prior = make_task_prior(std::move(prior_kernel), options.temperature);

  ComparisonReport report;
  report.prior_model_id = prior_model_id;
  report.options = options;

  for (const FeatureMatrix& f : features) {
    ModelRow row;
    row.model_id = f.model_id;
    row.is_prior = f.model_id == prior_model_id;
    const KernelMatrix m = build_kernel(f);
    row.stats = trace_stats(prior, m, options.include_diagonal);
    row.stats_alt = trace_stats(prior, m, !options.include_diagonal);
    // Same base seed everywhere: every model is probed on the same batch
    // of sampled tasks.
    row.probe = evaluate_over_tasks(f, prior, options.q, options.n_tasks,
                                    options.split, options.seed);
    report.rows.push_back(std::move(row));
  }

  std::vector<double> closed_mean, closed_var, probe_mean, probe_var;
  for (const ModelRow& row : report.rows) {
    if (row.is_prior) continue;  // self-alignment bias
    closed_mean.push_back(row.stats.mean);
    closed_var.push_back(row.stats.variance);
    probe_mean.push_back(row.probe.mean_accuracy);
    probe_var.push_back(row.probe.accuracy_variance);
  }
  report.mean_correlation = pearson_with_fisher_ci(closed_mean, probe_mean);
  report.variance_correlation = pearson_with_fisher_ci(closed_var, probe_var);
  return report;
}

ComparisonReport compare_models(DatasetManifest manifest,
                                const std::string& prior_model_id,
                                const CompareOptions& options) {
  const std::vector<FeatureMatrix> features = load_manifest_features(manifest);
  return compare_models(features, prior_model_id, options);
}

namespace {

json correlation_to_json(const Correlation& c) {
  json j{{"defined", c.defined}, {"n", c.n}};
  j["r"] = c.defined ? json(c.r) : json(nullptr);
  if (c.ci_defined) {
    j["ci95"] = json{{"low", c.ci_low}, {"high", c.ci_high}};
  } else {
    j["ci95"] = nullptr;
  }
  if (!c.reason.empty()) j["reason"] = c.reason;
  return j;
}

Correlation correlation_from_json(const json& j) {
  Correlation c;
  c.defined = j.at("defined").get<bool>();
  c.n = j.at("n").get<int>();
  if (c.defined) c.r = j.at("r").get<double>();
  if (!j.at("ci95").is_null()) {
    c.ci_defined = true;
    c.ci_low = j["ci95"].at("low").get<double>();
    c.ci_high = j["ci95"].at("high").get<double>();
  }
  c.reason = j.value("reason", "");
  return c;
}

json stats_to_json(const TaskStats& s) {
  return json{{"mean", s.mean},
              {"variance", s.variance},
              {"n", s.n},
              {"include_diagonal", s.include_diagonal}};
}

TaskStats stats_from_json(const json& j, double temperature) {
  TaskStats s;
  s.mean = j.at("mean").get<double>();
  s.variance = j.at("variance").get<double>();
  s.n = j.at("n").get<Eigen::Index>();
  s.include_diagonal = j.at("include_diagonal").get<bool>();
  s.temperature = temperature;
  return s;
}

json probe_to_json(const ProbeReport& p) {
  return json{{"per_task_accuracy", p.per_task_accuracy},
              {"mean_accuracy", p.mean_accuracy},
              {"accuracy_variance", p.accuracy_variance},
              {"n_tasks", p.n_tasks},
              {"skipped_tasks", p.skipped_tasks}};
}

ProbeReport probe_from_json(const json& j, const CompareOptions& options,
                            const std::string& prior_model_id) {
  ProbeReport p;
  p.per_task_accuracy = j.at("per_task_accuracy").get<std::vector<double>>();
  p.mean_accuracy = j.at("mean_accuracy").get<double>();
  p.accuracy_variance = j.at("accuracy_variance").get<double>();
  p.n_tasks = j.at("n_tasks").get<int>();
  p.skipped_tasks = j.at("skipped_tasks").get<std::vector<int>>();
  p.q = options.q;
  p.temperature = options.temperature;
  p.split = options.split;
  p.seed = options.seed;
  p.prior_model_id = prior_model_id;
  return p;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void save_report(const std::filesystem::path& path, const ComparisonReport& report) {
  const CompareOptions& o = report.options;
  json params{{"temperature", o.temperature}, {"kernel", to_string(o.kernel)},
              {"seed", o.seed},               {"q", o.q},
              {"n_tasks", o.n_tasks},         {"split", o.split},
              {"include_diagonal", o.include_diagonal},
              {"prior_model_id", report.prior_model_id}};

  json rows = json::array();
  for (const ModelRow& row : report.rows) {
    rows.push_back(json{{"model_id", row.model_id},
                        {"is_prior", row.is_prior},
                        {"task_stats", stats_to_json(row.stats)},
                        {"task_stats_alt", stats_to_json(row.stats_alt)},
                        {"probe_report", probe_to_json(row.probe)}});
  }
  json payload{{"rows", std::move(rows)},
               {"correlations",
                {{"mean", correlation_to_json(report.mean_correlation)},
                 {"variance", correlation_to_json(report.variance_correlation)}}}};

  json j{{"schema_version", 1},
         {"kind", "comparison_report"},
         {"params", std::move(params)},
         {"payload", std::move(payload)}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

ComparisonReport load_comparison_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw MalformedHeader(path.string() + ": " + e.what());
  }
  if (j.value("kind", "") != "comparison_report")
    throw MalformedHeader(path.string() + ": not a comparison_report");

  ComparisonReport report;
  const json& params = j.at("params");
  report.options.temperature = params.at("temperature").get<double>();
  report.options.kernel = kernel_kind_from_string(params.at("kernel").get<std::string>());
  report.options.seed = params.at("seed").get<std::uint64_t>();
  report.options.q = params.at("q").get<int>();
  report.options.n_tasks = params.at("n_tasks").get<int>();
  report.options.split = params.at("split").get<double>();
  report.options.include_diagonal = params.at("include_diagonal").get<bool>();
  report.prior_model_id = params.at("prior_model_id").get<std::string>();

  for (const json& row_json : j.at("payload").at("rows")) {
    ModelRow row;
    row.model_id = row_json.at("model_id").get<std::string>();
    row.is_prior = row_json.at("is_prior").get<bool>();
    row.stats = stats_from_json(row_json.at("task_stats"), report.options.temperature);
    row.stats_alt =
        stats_from_json(row_json.at("task_stats_alt"), report.options.temperature);
    row.probe = probe_from_json(row_json.at("probe_report"), report.options,
                                report.prior_model_id);
    report.rows.push_back(std::move(row));
  }
  report.mean_correlation =
      correlation_from_json(j.at("payload").at("correlations").at("mean"));
  report.variance_correlation =
      correlation_from_json(j.at("payload").at("correlations").at("variance"));
  return report;
}

void save_comparison_csv(const std::filesystem::path& path,
                         const ComparisonReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "model_id,is_prior,closed_mean,closed_variance,probe_mean_accuracy,"
         "probe_accuracy_variance,n_tasks,skipped_tasks\n";
  for (const ModelRow& row : report.rows) {
    out << row.model_id << ',' << (row.is_prior ? 1 : 0) << ','
        << format_double(row.stats.mean) << ',' << format_double(row.stats.variance)
        << ',' << format_double(row.probe.mean_accuracy) << ','
        << format_double(row.probe.accuracy_variance) << ',' << row.probe.n_tasks
        << ',' << row.probe.skipped_tasks.size() << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace taskprior
