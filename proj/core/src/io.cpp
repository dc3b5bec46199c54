#include "taskprior/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "taskprior/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "NPY ingestion assumes a little-endian host");

namespace taskprior {

using nlohmann::json;

namespace {

constexpr std::array<char, 6> kNpyMagic = {'\x93', 'N', 'U', 'M', 'P', 'Y'};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

// Pulls the value of `'key':` out of the header dict literal. The keys of
// an NPY v1.0 header are fixed and never appear in values.
std::string dict_value(const std::string& dict, const std::string& key,
                       const std::filesystem::path& path) {
  const std::string needle = "'" + key + "'";
  const auto key_pos = dict.find(needle);
  if (key_pos == std::string::npos)
    throw MalformedHeader(path.string() + ": header dict misses key '" + key + "'");
  auto pos = dict.find(':', key_pos + needle.size());
  if (pos == std::string::npos)
    throw MalformedHeader(path.string() + ": malformed header dict");
  ++pos;
  // value ends at the next top-level comma or the closing brace
  int depth = 0;
  std::string value;
  for (; pos < dict.size(); ++pos) {
    const char c = dict[pos];
    if (c == '(' || c == '[') ++depth;
    if (c == ')' || c == ']') --depth;
    if ((c == ',' && depth == 0) || c == '}') break;
    value += c;
  }
  return trim(value);
}

struct NpyHeader {
  bool is_f32 = false;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::size_t payload_offset = 0;
};

NpyHeader parse_npy_header(std::ifstream& in, const std::filesystem::path& path) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || !std::equal(kNpyMagic.begin(), kNpyMagic.end(), magic.begin()))
    throw MalformedHeader(path.string() + ": not an NPY file (bad magic)");
  const unsigned major = static_cast<unsigned char>(magic[6]);
  const unsigned minor = static_cast<unsigned char>(magic[7]);
  if (major != 1 || minor != 0)
    throw MalformedHeader(path.string() + ": NPY version " + std::to_string(major) +
                          "." + std::to_string(minor) + " not supported, need 1.0");

  std::array<unsigned char, 2> len_le{};
  in.read(reinterpret_cast<char*>(len_le.data()), 2);
  if (!in) throw MalformedHeader(path.string() + ": truncated NPY header");
  const std::size_t header_len =
      static_cast<std::size_t>(len_le[0]) | (static_cast<std::size_t>(len_le[1]) << 8);

  std::string dict(header_len, '\0');
  in.read(dict.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw MalformedHeader(path.string() + ": truncated NPY header");

  const std::string descr = dict_value(dict, "descr", path);
  NpyHeader header;
  if (descr == "'<f8'")
    header.is_f32 = false;
  else if (descr == "'<f4'")
    header.is_f32 = true;
  else
    throw MalformedHeader(path.string() + ": dtype " + descr +
                          " not supported, need '<f4' or '<f8'");

  const std::string fortran = dict_value(dict, "fortran_order", path);
  if (fortran == "True")
    throw MalformedHeader(path.string() + ": fortran_order arrays not supported");
  if (fortran != "False")
    throw MalformedHeader(path.string() + ": malformed fortran_order value '" +
                          fortran + "'");

  std::string shape = dict_value(dict, "shape", path);
  if (shape.size() < 2 || shape.front() != '(' || shape.back() != ')')
    throw MalformedHeader(path.string() + ": malformed shape tuple " + shape);
  shape = shape.substr(1, shape.size() - 2);
  std::vector<long long> dims;
  std::stringstream ss(shape);
  std::string token;
  while (std::getline(ss, token, ',')) {
    token = trim(token);
    if (token.empty()) continue;
    long long d = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), d);
    if (ec != std::errc() || ptr != token.data() + token.size() || d < 0)
      throw MalformedHeader(path.string() + ": malformed shape entry '" + token + "'");
    dims.push_back(d);
  }
  if (dims.size() != 2)
    throw DimensionError(path.string() + ": need a 2-D array, got " +
                         std::to_string(dims.size()) + "-D");
  header.rows = static_cast<Eigen::Index>(dims[0]);
  header.cols = static_cast<Eigen::Index>(dims[1]);
  header.payload_offset = 10 + header_len;
  return header;
}

void check_matrix_finite(const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (!std::isfinite(m(i, j))) throw NonFinite(i, j);
}

double parse_csv_number(const std::string& field, std::int64_t row,
                        std::int64_t col, const std::filesystem::path& path) {
  double value = 0.0;
  const std::string t = trim(field);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size())
    throw MalformedHeader(path.string() + ": cannot parse '" + t +
                          "' as a number at data row " + std::to_string(row) +
                          ", col " + std::to_string(col));
  return value;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (const char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}

bool all_numeric(const std::vector<std::string>& fields) {
  for (const auto& f : fields) {
    const std::string t = trim(f);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) return false;
  }
  return true;
}

json report_envelope(const std::string& kind, json params, json payload) {
  return json{{"schema_version", 1},
              {"kind", kind},
              {"params", std::move(params)},
              {"payload", std::move(payload)}};
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

json read_json(const std::filesystem::path& path, const std::string& expected_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw MalformedHeader(path.string() + ": " + e.what());
  }
  if (j.value("schema_version", 0) != 1)
    throw MalformedHeader(path.string() + ": unsupported schema_version");
  if (!expected_kind.empty() && j.value("kind", "") != expected_kind)
    throw MalformedHeader(path.string() + ": expected kind '" + expected_kind +
                          "', got '" + j.value("kind", "") + "'");
  return j;
}

}  // namespace

const char* to_string(FeatureFormat format) {
  return format == FeatureFormat::npy ? "npy" : "csv";
}

FeatureFormat feature_format_from_string(const std::string& name) {
  if (name == "npy") return FeatureFormat::npy;
  if (name == "csv") return FeatureFormat::csv;
  throw InvalidArgument("unknown feature format '" + name + "'");
}

FeatureFormat guess_format(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".npy") return FeatureFormat::npy;
  if (ext == ".csv") return FeatureFormat::csv;
  throw InvalidArgument("cannot infer feature format from '" + path.string() +
                        "'; expected a .npy or .csv extension");
}

Eigen::MatrixXd load_npy_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const NpyHeader header = parse_npy_header(in, path);

  const std::size_t count =
      static_cast<std::size_t>(header.rows) * static_cast<std::size_t>(header.cols);
  const std::size_t item = header.is_f32 ? 4 : 8;

  in.seekg(0, std::ios::end);
  const std::size_t file_size = static_cast<std::size_t>(in.tellg());
  if (file_size != header.payload_offset + count * item)
    throw MalformedHeader(path.string() + ": payload size mismatch (header says " +
                          std::to_string(header.payload_offset + count * item) +
                          " bytes, file has " + std::to_string(file_size) + ")");
  in.seekg(static_cast<std::streamoff>(header.payload_offset), std::ios::beg);

  using RowMajor =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMajor m(header.rows, header.cols);
  if (header.is_f32) {
    std::vector<float> buffer(count);
    in.read(reinterpret_cast<char*>(buffer.data()),
            static_cast<std::streamsize>(count * item));
    if (!in) throw IoError("failed reading " + path.string());
    m = Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>(buffer.data(), header.rows,
                                                         header.cols)
            .cast<double>();
  } else {
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(count * item));
    if (!in) throw IoError("failed reading " + path.string());
  }
  Eigen::MatrixXd out = m;
  check_matrix_finite(out);
  return out;
}

void save_npy_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::string dict = "{'descr': '<f8', 'fortran_order': False, 'shape': (" +
                     std::to_string(m.rows()) + ", " + std::to_string(m.cols()) +
                     "), }";
  // pad with spaces so the payload starts 16-byte aligned
  const std::size_t unpadded = 10 + dict.size() + 1;
  dict.append((16 - unpadded % 16) % 16, ' ');
  dict += '\n';

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kNpyMagic.data(), static_cast<std::streamsize>(kNpyMagic.size()));
  out.put('\x01');
  out.put('\x00');
  const auto len = static_cast<std::uint16_t>(dict.size());
  out.put(static_cast<char>(len & 0xff));
  out.put(static_cast<char>((len >> 8) & 0xff));
  out << dict;

  using RowMajor =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor rm = m;
  out.write(reinterpret_cast<const char*>(rm.data()),
            static_cast<std::streamsize>(sizeof(double) *
                                         static_cast<std::size_t>(rm.size())));
  if (!out) throw IoError("failed writing " + path.string());
}

FeatureMatrix load_features_csv(const std::filesystem::path& path,
                                std::string model_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());

  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) throw MalformedHeader(path.string() + ": empty CSV file");

  bool has_header = !all_numeric(rows.front());
  bool has_ids = has_header && trim(rows.front().front()) == "id";
  const std::size_t n_fields = rows.front().size();
  const std::size_t first_data = has_header ? 1 : 0;
  const std::size_t value_offset = has_ids ? 1 : 0;
  if (n_fields <= value_offset)
    throw MalformedHeader(path.string() + ": no feature columns");

  const std::size_t n = rows.size() - first_data;
  const std::size_t d = n_fields - value_offset;
  Eigen::MatrixXd data(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<std::string> ids;
  if (has_ids) ids.reserve(n);

  for (std::size_t r = 0; r < n; ++r) {
    const auto& fields = rows[r + first_data];
    if (fields.size() != n_fields)
      throw MalformedHeader(path.string() + ": row " + std::to_string(r) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(n_fields));
    if (has_ids) ids.push_back(trim(fields.front()));
    for (std::size_t c = 0; c < d; ++c) {
      const double v =
          parse_csv_number(fields[c + value_offset], static_cast<std::int64_t>(r),
                           static_cast<std::int64_t>(c), path);
      if (!std::isfinite(v))
        throw NonFinite(static_cast<std::int64_t>(r), static_cast<std::int64_t>(c));
      data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return make_feature_matrix(std::move(data), std::move(model_id), std::move(ids));
}

FeatureMatrix load_features(const std::filesystem::path& path, FeatureFormat format,
                            std::string model_id) {
  if (model_id.empty()) model_id = path.stem().string();
  if (format == FeatureFormat::csv)
    return load_features_csv(path, std::move(model_id));
  return make_feature_matrix(load_npy_matrix(path), std::move(model_id));
}

std::filesystem::path kernel_meta_path(const std::filesystem::path& npy_path) {
  std::filesystem::path p = npy_path;
  p.replace_extension(".meta.json");
  return p;
}

void save_kernel(const std::filesystem::path& npy_path, const KernelMatrix& kernel) {
  save_npy_matrix(npy_path, kernel.data);
  json params{{"kernel", to_string(kernel.kind)},
              {"centered", kernel.centered},
              {"source_model_id", kernel.source_model_id}};
  json payload{{"n", kernel.n()}, {"symmetrized", kernel.symmetrized}};
  write_json(kernel_meta_path(npy_path),
             report_envelope("kernel_meta", std::move(params), std::move(payload)));
}

KernelMatrix load_kernel(const std::filesystem::path& npy_path) {
  const json j = read_json(kernel_meta_path(npy_path), "kernel_meta");
  KernelMatrix kernel;
  kernel.data = load_npy_matrix(npy_path);
  if (kernel.data.rows() != kernel.data.cols())
    throw NotSquare(npy_path.string() + ": kernel file is not square");
  kernel.kind = kernel_kind_from_string(j["params"].value("kernel", "precomputed"));
  kernel.centered = j["params"].value("centered", false);
  kernel.source_model_id = j["params"].value("source_model_id", "");
  kernel.symmetrized = j["payload"].value("symmetrized", false);
  return kernel;
}

void save_report(const std::filesystem::path& path, const TaskStats& stats,
                 KernelKind kernel, const std::string& prior_model_id,
                 const std::string& model_id) {
  const double n = static_cast<double>(stats.n);
  json params{{"temperature", stats.temperature},
              {"kernel", to_string(kernel)},
              {"seed", nullptr},
              {"prior_model_id", prior_model_id},
              {"model_id", model_id}};
  json payload{{"mean", stats.mean},
               {"variance", stats.variance},
               {"n", stats.n},
               {"include_diagonal", stats.include_diagonal},
               {"normalized",
                {{"mean_per_n", stats.mean / n},
                 {"mean_per_n2", stats.mean / (n * n)},
                 {"variance_per_n", stats.variance / n},
                 {"variance_per_n2", stats.variance / (n * n)}}}};
  write_json(path, report_envelope("task_stats", std::move(params), std::move(payload)));
}

TaskStats load_task_stats(const std::filesystem::path& path) {
  const json j = read_json(path, "task_stats");
  TaskStats stats;
  stats.mean = j["payload"].at("mean").get<double>();
  stats.variance = j["payload"].at("variance").get<double>();
  stats.n = j["payload"].at("n").get<Eigen::Index>();
  stats.include_diagonal = j["payload"].at("include_diagonal").get<bool>();
  stats.temperature = j["params"].at("temperature").get<double>();
  return stats;
}

void save_report(const std::filesystem::path& path, const Labeling& labeling,
                 KernelKind kernel, const std::string& prior_model_id) {
  json params{{"q", labeling.q},
              {"temperature", labeling.temperature},
              {"seed", labeling.seed},
              {"shuffle", labeling.shuffled},
              {"kernel", to_string(kernel)},
              {"prior_model_id", prior_model_id}};
  json payload{{"labels", labeling.labels}, {"n", labeling.labels.size()}};
  write_json(path, report_envelope("labeling", std::move(params), std::move(payload)));
}

Labeling load_labeling(const std::filesystem::path& path) {
  const json j = read_json(path, "labeling");
  Labeling labeling;
  labeling.labels = j["payload"].at("labels").get<std::vector<int>>();
  labeling.q = j["params"].at("q").get<int>();
  labeling.temperature = j["params"].at("temperature").get<double>();
  labeling.seed = j["params"].at("seed").get<std::uint64_t>();
  labeling.shuffled = j["params"].at("shuffle").get<bool>();
  return labeling;
}

void save_report(const std::filesystem::path& path, const ProbeReport& report,
                 KernelKind kernel) {
  json params{{"temperature", report.temperature},
              {"kernel", to_string(kernel)},
              {"seed", report.seed},
              {"q", report.q},
              {"split", report.split},
              {"prior_model_id", report.prior_model_id},
              {"n_tasks_requested",
               report.n_tasks + static_cast<int>(report.skipped_tasks.size())}};
  json payload{{"per_task_accuracy", report.per_task_accuracy},
               {"mean_accuracy", report.mean_accuracy},
               {"accuracy_variance", report.accuracy_variance},
               {"n_tasks", report.n_tasks},
               {"skipped_tasks", report.skipped_tasks}};
  write_json(path,
             report_envelope("probe_report", std::move(params), std::move(payload)));
}

ProbeReport load_probe_report(const std::filesystem::path& path) {
  const json j = read_json(path, "probe_report");
  ProbeReport report;
  report.per_task_accuracy =
      j["payload"].at("per_task_accuracy").get<std::vector<double>>();
  report.mean_accuracy = j["payload"].at("mean_accuracy").get<double>();
  report.accuracy_variance = j["payload"].at("accuracy_variance").get<double>();
  report.n_tasks = j["payload"].at("n_tasks").get<int>();
  report.skipped_tasks = j["payload"].at("skipped_tasks").get<std::vector<int>>();
  report.temperature = j["params"].at("temperature").get<double>();
  report.seed = j["params"].at("seed").get<std::uint64_t>();
  report.q = j["params"].at("q").get<int>();
  report.split = j["params"].at("split").get<double>();
  report.prior_model_id = j["params"].at("prior_model_id").get<std::string>();
  return report;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw MalformedHeader(path.string() + ": " + e.what());
  }
  if (!j.contains("models") || !j["models"].is_array() || j["models"].empty())
    throw MalformedHeader(path.string() + ": manifest needs a non-empty 'models' array");

  const std::filesystem::path base = path.parent_path();
  DatasetManifest manifest;
  for (const auto& entry : j["models"]) {
    ManifestEntry m;
    m.model_id = entry.at("id").get<std::string>();
    std::filesystem::path p = entry.at("path").get<std::string>();
    m.path = p.is_absolute() ? p : base / p;
    m.format = entry.contains("format")
                   ? feature_format_from_string(entry["format"].get<std::string>())
                   : guess_format(m.path);
    manifest.entries.push_back(std::move(m));
  }
  return manifest;
}

std::vector<FeatureMatrix> load_manifest_features(DatasetManifest& manifest) {
  std::vector<FeatureMatrix> features;
  features.reserve(manifest.entries.size());
  for (const auto& entry : manifest.entries)
    features.push_back(load_features(entry.path, entry.format, entry.model_id));

  const FeatureMatrix& first = features.front();
  for (std::size_t i = 1; i < features.size(); ++i) {
    if (features[i].n_samples() != first.n_samples())
      throw ShapeMismatch("manifest entries disagree on sample count: '" +
                          first.model_id + "' has " +
                          std::to_string(first.n_samples()) + ", '" +
                          features[i].model_id + "' has " +
                          std::to_string(features[i].n_samples()));
    if (features[i].explicit_ids && first.explicit_ids &&
        features[i].sample_ids != first.sample_ids)
      throw ShapeMismatch("manifest entries '" + first.model_id + "' and '" +
                          features[i].model_id + "' disagree on sample id order");
  }
  manifest.sample_ids = first.sample_ids;
  return features;
}

}  // namespace taskprior
