#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "taskprior/errors.hpp"
#include "taskprior/kernel.hpp"
#include "taskprior/prior.hpp"
#include "test_support.hpp"

using namespace taskprior;

namespace {

FeatureMatrix features_from(Eigen::MatrixXd data) {
  return make_feature_matrix(std::move(data), "test");
}

void check_kernel_invariants(const KernelMatrix& k) {
  const Eigen::Index n = k.n();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      CHECK(std::abs(k.data(i, j) - k.data(j, i)) <=
            1e-9 * std::max(1.0, std::abs(k.data(i, j))));
  if (k.centered)
    for (Eigen::Index i = 0; i < n; ++i)
      CHECK(std::abs(k.data.row(i).sum()) <= 1e-6 * static_cast<double>(n));
  if (k.factor)
    CHECK((k.data - *k.factor * k.factor->transpose()).cwiseAbs().maxCoeff() <=
          1e-6);
}

}  // namespace

TEST_CASE("centered cosine of 2-D one-hot rows matches the hand computation") {
  // rows are unit length, so only the centering acts: K = H H = H
  Eigen::MatrixXd f(2, 2);
  f << 1, 0, 0, 1;
  const KernelMatrix k = centered_cosine_kernel(features_from(f));
  CHECK(k.data(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(k.data(0, 1) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(k.data(1, 0) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(k.data(1, 1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(k.centered);
  CHECK(k.kind == KernelKind::centered_cosine);
  check_kernel_invariants(k);
}

TEST_CASE("two identical rows center to zero and are rejected") {
  Eigen::MatrixXd f(2, 3);
  f << 1, 2, 3, 1, 2, 3;
  CHECK_THROWS_AS(centered_cosine_kernel(features_from(f)), ZeroRow);
}

TEST_CASE("an exactly zero feature row is rejected") {
  Eigen::MatrixXd f(3, 2);
  f << 1, 0, 0, 0, 0, 1;
  CHECK_THROWS_AS(centered_cosine_kernel(features_from(f)), ZeroRow);
}

TEST_CASE("centered cosine invariants hold on random input") {
  CounterRng rng(101);
  for (int rep = 0; rep < 10; ++rep) {
    const KernelMatrix k =
        centered_cosine_kernel(features_from(tp_test::random_uniform(8, 5, rng)));
    check_kernel_invariants(k);
  }
}

TEST_CASE("centered cosine is permutation equivariant") {
  CounterRng rng(55);
  const Eigen::MatrixXd f = tp_test::random_uniform(6, 4, rng);
  const KernelMatrix k = centered_cosine_kernel(features_from(f));

  // a fixed 6-permutation
  const int perm[6] = {3, 0, 5, 1, 4, 2};
  Eigen::MatrixXd pf(6, 4);
  for (int i = 0; i < 6; ++i) pf.row(i) = f.row(perm[i]);
  const KernelMatrix pk = centered_cosine_kernel(features_from(pf));

  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      CHECK(pk.data(i, j) == doctest::Approx(k.data(perm[i], perm[j])).epsilon(1e-10));
}

TEST_CASE("double centering is idempotent") {
  CounterRng rng(77);
  Eigen::MatrixXd k = tp_test::random_symmetric(7, rng);
  center_kernel_in_place(k);
  Eigen::MatrixXd once = k;
  center_kernel_in_place(k);
  CHECK((k - once).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("precomputed kernel") {
  SUBCASE("identity is unchanged without centering") {
    const KernelMatrix k = precomputed_kernel(Eigen::MatrixXd::Identity(3, 3), false);
    CHECK(k.data == Eigen::MatrixXd::Identity(3, 3));
    CHECK(!k.symmetrized);
    CHECK(!k.centered);
  }
  SUBCASE("asymmetric input is averaged and flagged") {
    Eigen::MatrixXd m(2, 2);
    m << 0, 1, 0, 0;
    const KernelMatrix k = precomputed_kernel(m, false);
    CHECK(k.data(0, 1) == 0.5);
    CHECK(k.data(1, 0) == 0.5);
    CHECK(k.data(0, 0) == 0.0);
    CHECK(k.symmetrized);
  }
  SUBCASE("centering produces near-zero row sums") {
    CounterRng rng(9);
    const KernelMatrix k = precomputed_kernel(tp_test::random_symmetric(4, rng), true);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(k.data.row(i).sum()) <= 1e-12 * 4);
    check_kernel_invariants(k);
  }
  SUBCASE("non-square input is rejected") {
    CHECK_THROWS_AS(precomputed_kernel(Eigen::MatrixXd::Zero(2, 3), false), NotSquare);
  }
  SUBCASE("non-finite input is rejected") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
    m(0, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(precomputed_kernel(m, false), NonFinite);
  }
}

TEST_CASE("factorize recovers a planted low-rank Gram matrix") {
  CounterRng rng(13);
  const Eigen::MatrixXd z = tp_test::random_uniform(5, 2, rng);
  const KernelMatrix k = tp_test::as_kernel(z * z.transpose());
  const Eigen::MatrixXd zr = factorize(k);
  CHECK((zr * zr.transpose() - k.data).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(zr.cols() == 2);
}

TEST_CASE("factorize of the identity reproduces the identity") {
  const KernelMatrix k = tp_test::as_kernel(Eigen::MatrixXd::Identity(4, 4));
  const Eigen::MatrixXd z = factorize(k);
  CHECK((z * z.transpose() - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <=
        1e-10);
}

TEST_CASE("factorize clips negative eigenvalues to zero") {
  // rotate diag(1, -0.1) so the matrix is dense
  const double theta = 0.3;
  Eigen::Matrix2d rot;
  rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  Eigen::Matrix2d diag = Eigen::Vector2d(1.0, -0.1).asDiagonal();
  const Eigen::MatrixXd k_data = rot * diag * rot.transpose();

  const Eigen::MatrixXd z = factorize(tp_test::as_kernel(k_data));
  CHECK(z.cols() == 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(z * z.transpose());
  CHECK(eig.eigenvalues()(0) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(eig.eigenvalues()(1) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("factorize handles the zero matrix") {
  const Eigen::MatrixXd z = factorize(tp_test::as_kernel(Eigen::MatrixXd::Zero(3, 3)));
  CHECK(z.cols() == 0);
  CHECK(z.rows() == 3);
}

TEST_CASE("combining with the zero kernel is the identity") {
  CounterRng rng(21);
  const KernelMatrix k = tp_test::as_kernel(tp_test::random_symmetric(4, rng));
  const KernelMatrix zero = tp_test::as_kernel(Eigen::MatrixXd::Zero(4, 4));
  const KernelMatrix sum = combine_priors(k, zero);
  CHECK(sum.data == k.data);
}

TEST_CASE("combined prior edge probabilities use the summed kernel") {
  CounterRng rng(22);
  const KernelMatrix k1 = tp_test::as_kernel(tp_test::random_symmetric(3, rng));
  const KernelMatrix k2 = tp_test::as_kernel(tp_test::random_symmetric(3, rng));
  const double t = 0.7;
  const TaskPrior combined = make_task_prior(combine_priors(k1, k2), t);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(edge_probability(combined, i, j) ==
            doctest::Approx(sigmoid((k1.data(i, j) + k2.data(i, j)) / t))
                .epsilon(1e-12));
}

TEST_CASE("combining concatenates factors") {
  CounterRng rng(23);
  const Eigen::MatrixXd z1 = tp_test::random_uniform(6, 2, rng);
  const Eigen::MatrixXd z2 = tp_test::random_uniform(6, 3, rng);
  KernelMatrix k1 = tp_test::as_kernel(z1 * z1.transpose());
  KernelMatrix k2 = tp_test::as_kernel(z2 * z2.transpose());
  k1.factor = z1;
  k2.factor = z2;
  const KernelMatrix sum = combine_priors(k1, k2);
  REQUIRE(sum.factor.has_value());
  CHECK(sum.factor->cols() == 5);
  CHECK((*sum.factor * sum.factor->transpose() - (k1.data + k2.data))
            .cwiseAbs()
            .maxCoeff() <= 1e-12);
}

TEST_CASE("combining kernels of different sizes fails") {
  const KernelMatrix a = tp_test::as_kernel(Eigen::MatrixXd::Zero(3, 3));
  const KernelMatrix b = tp_test::as_kernel(Eigen::MatrixXd::Zero(4, 4));
  CHECK_THROWS_AS(combine_priors(a, b), ShapeMismatch);
}

TEST_CASE("ssl prior graph is the expected block matrix") {
  const KernelMatrix g = ssl_prior_graph(2, 2);
  Eigen::MatrixXd expected(4, 4);
  expected << 1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 1, 1, 0, 0, 1, 1;
  CHECK(g.data == expected);
  CHECK(!g.centered);
  CHECK(g.kind == KernelKind::precomputed);
}

TEST_CASE("ssl prior with one view is the identity") {
  const KernelMatrix g = ssl_prior_graph(5, 1);
  CHECK(g.data == Eigen::MatrixXd::Identity(5, 5));
}

TEST_CASE("ssl prior equals Y Yᵀ for the per-sample one-hot labeling") {
  const Eigen::Index n = 3, v = 4;
  const KernelMatrix g = ssl_prior_graph(n, v);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n * v, n);
  for (Eigen::Index i = 0; i < n * v; ++i) y(i, i / v) = 1.0;
  CHECK(g.data == y * y.transpose());
  REQUIRE(g.factor.has_value());
  CHECK(*g.factor == y);
}

TEST_CASE("ssl prior structural properties") {
  const Eigen::Index n = 4, v = 3;
  const KernelMatrix g = ssl_prior_graph(n, v);
  CHECK(g.data == g.data.transpose().eval());
  // each block of ones is idempotent up to the view count
  CHECK(((g.data * g.data) - static_cast<double>(v) * g.data).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK(g.data.sum() == static_cast<double>(n * v * v));
  CHECK_THROWS_AS(ssl_prior_graph(0, 2), InvalidArgument);
}

TEST_CASE("linear kernel is the raw Gram matrix with an exact factor") {
  CounterRng rng(31);
  const Eigen::MatrixXd f = tp_test::random_uniform(5, 3, rng);
  const KernelMatrix k = linear_kernel(features_from(f));
  CHECK((k.data - f * f.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  REQUIRE(k.factor.has_value());
  CHECK(*k.factor == f);
  CHECK(!k.centered);
}
