#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "taskprior/kernel.hpp"
#include "taskprior/prior.hpp"
#include "taskprior/rng.hpp"

namespace tp_test {

inline Eigen::MatrixXd random_uniform(Eigen::Index rows, Eigen::Index cols,
                                      taskprior::CounterRng& rng, double lo = -1.0,
                                      double hi = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      m(i, j) = lo + (hi - lo) * rng.next_double();
  return m;
}

inline Eigen::MatrixXd random_gaussian(Eigen::Index rows, Eigen::Index cols,
                                       taskprior::CounterRng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.next_gaussian();
  return m;
}

inline Eigen::MatrixXd random_symmetric(Eigen::Index n, taskprior::CounterRng& rng,
                                        double scale = 1.0) {
  Eigen::MatrixXd m = random_uniform(n, n, rng, -scale, scale);
  return ((m + m.transpose()) * 0.5).eval();
}

inline taskprior::KernelMatrix as_kernel(Eigen::MatrixXd m) {
  return taskprior::precomputed_kernel(std::move(m), /*center=*/false);
}

inline Eigen::MatrixXd random_onehot(Eigen::Index n, int q,
                                     taskprior::CounterRng& rng) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, q);
  for (Eigen::Index i = 0; i < n; ++i)
    y(i, static_cast<Eigen::Index>(rng.next_below(static_cast<std::uint64_t>(q)))) =
        1.0;
  return y;
}

inline double total_variation(std::span<const double> p, std::span<const double> q) {
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return 0.5 * tv;
}

/// Chi-square statistic against uniform expected counts.
inline double chi_square_uniform(std::span<const std::int64_t> counts) {
  double total = 0.0;
  for (const auto c : counts) total += static_cast<double>(c);
  const double expected = total / static_cast<double>(counts.size());
  double stat = 0.0;
  for (const auto c : counts) {
    const double d = static_cast<double>(c) - expected;
    stat += d * d / expected;
  }
  return stat;
}

/// Spearman rank correlation (no tie handling: callers use distinct values).
inline double spearman(std::span<const double> x, std::span<const double> y) {
  const auto ranks = [](std::span<const double> v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double rank = 0;
      for (std::size_t j = 0; j < v.size(); ++j)
        if (v[j] < v[i]) rank += 1.0;
      r[i] = rank;
    }
    return r;
  };
  const std::vector<double> rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = rx[i] - ry[i];
    d2 += d * d;
  }
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

}  // namespace tp_test
