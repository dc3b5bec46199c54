#include "taskprior/feature_matrix.hpp"

#include <cmath>
#include <unordered_set>
#include <utility>

#include "taskprior/errors.hpp"

namespace taskprior {

FeatureMatrix make_feature_matrix(Eigen::MatrixXd data, std::string model_id,
                                  std::vector<std::string> ids) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (n < 2 || d < 1)
    throw DimensionError("feature matrix must be at least 2x1, got " +
                         std::to_string(n) + "x" + std::to_string(d));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      if (!std::isfinite(data(i, j))) throw NonFinite(i, j);

  FeatureMatrix out;
  out.explicit_ids = !ids.empty();
  if (ids.empty()) {
    ids.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  }
  if (static_cast<Eigen::Index>(ids.size()) != n)
    throw ShapeMismatch("got " + std::to_string(ids.size()) + " sample ids for " +
                        std::to_string(n) + " rows");
  std::unordered_set<std::string> seen;
  for (const auto& id : ids)
    if (!seen.insert(id).second)
      throw InvalidArgument("duplicate sample id '" + id + "'");

  out.data = std::move(data);
  out.sample_ids = std::move(ids);
  out.model_id = std::move(model_id);
  return out;
}

}  // namespace taskprior
