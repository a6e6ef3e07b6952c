#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "fedcgau/error.hpp"
#include "fedcgau/linalg/eigen.hpp"
#include "fedcgau/linalg/kmeans.hpp"
#include "fedcgau/linalg/matrix.hpp"
#include "fedcgau/linalg/pca.hpp"

using namespace fedcgau;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (double& v : m.values()) v = n(rng);
  return m;
}

Matrix random_psd(std::size_t n, std::size_t rank, std::mt19937_64& rng) {
  const Matrix a = random_matrix(n, rank, rng);
  return symmetrized(matmul_nt(a, a));
}

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

double rel_frobenius(const Matrix& a, const Matrix& b) {
  return frobenius_norm(a - b) / std::max(1.0, frobenius_norm(b));
}

}  // namespace

TEST_CASE("matrix products match a naive triple loop") {
  std::mt19937_64 rng(1);
  const Matrix a = random_matrix(7, 5, rng);
  const Matrix b = random_matrix(5, 9, rng);
  const Matrix c = random_matrix(9, 5, rng);
  const Matrix ab = matmul(a, b);
  for (std::size_t i = 0; i < 7; ++i) {
    for (std::size_t j = 0; j < 9; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 5; ++k) s += a(i, k) * b(k, j);
      CHECK(ab(i, j) == doctest::Approx(s).epsilon(1e-12));
    }
  }
  CHECK(rel_frobenius(matmul_tn(a.transposed(), b), ab) < 1e-14);
  CHECK(rel_frobenius(matmul_nt(a, c), matmul(a, c.transposed())) < 1e-14);
  CHECK_THROWS_AS(matmul(a, a), DimensionError);
  CHECK_THROWS_AS(a + b, DimensionError);
}

TEST_CASE("matrix helpers") {
  const Matrix m{{1, 2}, {3, 4}};
  CHECK(trace(m) == 5.0);
  CHECK(column_sums(m) == std::vector<double>{4, 6});
  CHECK(column_means(m) == std::vector<double>{2, 3});
  CHECK(asymmetry(m) == 1.0);
  CHECK(symmetrized(m) == Matrix{{1, 2.5}, {2.5, 4}});
  CHECK(max_abs(m) == 4.0);
  const Matrix parts[] = {m, Matrix{{5, 6}}};
  CHECK(vstack(parts) == Matrix{{1, 2}, {3, 4}, {5, 6}});
  const std::size_t idx[] = {1, 0, 1};
  CHECK(m.select_rows(idx) == Matrix{{3, 4}, {1, 2}, {3, 4}});
  Matrix n = m;
  n(0, 0) = std::nan("");
  CHECK_FALSE(all_finite(n));
}

TEST_CASE("sym_eigen hand cases") {
  SUBCASE("identity") {
    const auto e = sym_eigen(Matrix::identity(3));
    for (double v : e.values) CHECK(v == doctest::Approx(1.0));
  }
  SUBCASE("diagonal") {
    const double d[] = {1.0, 4.0};
    const auto e = sym_eigen(Matrix::diagonal(d));
    CHECK(e.values[0] == doctest::Approx(4.0));
    CHECK(e.values[1] == doctest::Approx(1.0));
    CHECK(std::abs(e.vectors(1, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(e.vectors(0, 1)) == doctest::Approx(1.0));
  }
  SUBCASE("2x2 with characteristic polynomial l^2 - 4l + 3") {
    const auto e = sym_eigen(Matrix{{2, 1}, {1, 2}});
    CHECK(e.values[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(e.values[1] == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK_THROWS_AS(sym_eigen(Matrix(2, 3)), DimensionError);
  CHECK_THROWS_AS(sym_eigen(Matrix{{1, 2}, {0, 1}}), DimensionError);
}

TEST_CASE("sym_eigen reconstructs and matches an independent solver") {
  std::mt19937_64 rng(5);
  for (std::size_t n : {1u, 2u, 3u, 8u, 16u}) {
    const Matrix s = symmetrized(random_matrix(n, n, rng));
    const auto e = sym_eigen(s);
    CHECK(std::is_sorted(e.values.rbegin(), e.values.rend()));
    const Matrix recon = matmul_nt(matmul(e.vectors, Matrix::diagonal(e.values)), e.vectors);
    CHECK(rel_frobenius(recon, s) < 1e-12);
    CHECK(rel_frobenius(matmul_tn(e.vectors, e.vectors), Matrix::identity(n)) < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> oracle(to_eigen(s));
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(e.values[i] == doctest::Approx(oracle.eigenvalues()(static_cast<Eigen::Index>(n - 1 - i))).epsilon(1e-10));
    }
  }
}

TEST_CASE("psd_sqrt") {
  CHECK(psd_sqrt(Matrix::identity(3)) == Matrix::identity(3));
  const double d[] = {4.0, 9.0};
  const Matrix r = psd_sqrt(Matrix::diagonal(d));
  CHECK(r(0, 0) == doctest::Approx(2.0));
  CHECK(r(1, 1) == doctest::Approx(3.0));
  CHECK(std::abs(r(0, 1)) < 1e-15);

  const Matrix a{{2, 1}, {1, 2}};
  const Matrix s = psd_sqrt(a);
  CHECK(asymmetry(s) == 0.0);
  CHECK(rel_frobenius(matmul(s, s), a) < 1e-8);

  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 1 + static_cast<std::size_t>(t % 12);
    const Matrix p = random_psd(n, 1 + static_cast<std::size_t>(t % 3), rng);  // often rank deficient
    const Matrix q = psd_sqrt(p);
    CHECK(rel_frobenius(matmul(q, q), p) < 1e-8);
    CHECK(psd_sqrt_trace(p) == doctest::Approx(trace(q)).epsilon(1e-10));
  }
  CHECK_THROWS_AS(psd_sqrt(Matrix{{1, 0}, {0, -1e-3}}), NotPsdError);
  CHECK_NOTHROW(psd_sqrt(Matrix{{1, 0}, {0, -1e-12}}));
}

TEST_CASE("pca on rank-one data recovers the line direction") {
  Matrix x(50, 2);
  for (std::size_t i = 0; i < 50; ++i) {
    const double t = static_cast<double>(i) - 20.0;
    x(i, 0) = 3.0 + t;
    x(i, 1) = -1.0 + 2.0 * t;
  }
  const Pca p = pca_fit(x, 2);
  CHECK(p.components(0, 0) == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-12));
  CHECK(p.components(1, 0) == doctest::Approx(2.0 / std::sqrt(5.0)).epsilon(1e-12));
  const auto ratio = p.explained_variance_ratio();
  CHECK(ratio[1] < 1e-10);
  CHECK(p.mean[0] == doctest::Approx(3.0 + 4.5));
  const Matrix proj = p.project(x);
  CHECK(proj.rows() == 50);
  CHECK(std::abs(column_means(proj)[0]) < 1e-12);
}

TEST_CASE("pca on an isotropic Gaussian sample") {
  std::mt19937_64 rng(21);
  const Matrix x = random_matrix(100000, 2, rng);
  const auto ratio = pca_fit(x, 2).explained_variance_ratio();
  CHECK(ratio[0] == doctest::Approx(0.5).epsilon(0.02));
  CHECK(ratio[1] == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("pca on a repeated point") {
  Matrix x(6, 3);
  for (std::size_t i = 0; i < 6; ++i) x.row(i)[0] = 2.0, x.row(i)[1] = -1.0, x.row(i)[2] = 0.5;
  const Pca p = pca_fit(x, 2);
  for (double v : p.explained_variance) CHECK(v == 0.0);
  CHECK(rel_frobenius(matmul_tn(p.components, p.components), Matrix::identity(2)) < 1e-12);
  const Matrix proj = p.project(x);
  for (double v : proj.values()) CHECK(v == 0.0);
  CHECK(p.explained_variance_ratio() == std::vector<double>{0.0, 0.0});
}

TEST_CASE("pca argument errors") {
  std::mt19937_64 rng(2);
  const Matrix x = random_matrix(5, 3, rng);
  CHECK_THROWS_AS(pca_fit(x, 0), DimensionError);
  CHECK_THROWS_AS(pca_fit(x, 4), DimensionError);
  CHECK_THROWS_AS(pca_fit(random_matrix(1, 3, rng), 1), DimensionError);
  CHECK_THROWS_AS(pca_fit(x, 2).project(Matrix(2, 4)), DimensionError);
}

TEST_CASE("kmeans on four points against exhaustive enumeration") {
  const Matrix x{{0}, {1}, {10}, {11}};
  // Best 2-partition by brute force over all non-trivial label vectors.
  double best = 1e300;
  unsigned best_mask = 0;
  for (unsigned mask = 1; mask < 15; ++mask) {
    double sse = 0.0;
    for (unsigned side = 0; side < 2; ++side) {
      double sum = 0.0, n = 0.0;
      for (unsigned i = 0; i < 4; ++i)
        if (((mask >> i) & 1u) == side) sum += x(i, 0), n += 1;
      const double mu = sum / n;
      for (unsigned i = 0; i < 4; ++i)
        if (((mask >> i) & 1u) == side) sse += (x(i, 0) - mu) * (x(i, 0) - mu);
    }
    if (sse < best) best = sse, best_mask = mask;
  }
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = kmeans(x, 2, seed);
    CHECK(r.converged);
    CHECK(r.sse_history.back() == doctest::Approx(best));
    for (unsigned i = 0; i < 4; ++i)
      for (unsigned j = 0; j < 4; ++j)
        CHECK((r.labels[i] == r.labels[j]) == (((best_mask >> i) & 1u) == ((best_mask >> j) & 1u)));
    std::vector<double> c{r.centroids(0, 0), r.centroids(1, 0)};
    std::sort(c.begin(), c.end());
    CHECK(c[0] == 0.5);
    CHECK(c[1] == 10.5);
  }
}

TEST_CASE("kmeans edge cases") {
  std::mt19937_64 rng(4);
  const Matrix x = random_matrix(30, 3, rng);
  const auto one = kmeans(x, 1, 7);
  const auto mean = column_means(x);
  for (std::size_t j = 0; j < 3; ++j) CHECK(one.centroids(0, j) == doctest::Approx(mean[j]).epsilon(1e-12));
  for (auto l : one.labels) CHECK(l == 0);

  const auto all = kmeans(x, 30, 7);
  CHECK(all.sse_history.back() == 0.0);
  std::vector<std::size_t> labels = all.labels;
  std::sort(labels.begin(), labels.end());
  CHECK(std::adjacent_find(labels.begin(), labels.end()) == labels.end());

  CHECK_THROWS_AS(kmeans(x, 31, 0), InfeasibleError);
  CHECK_THROWS_AS(kmeans(x, 0, 0), InfeasibleError);
}

TEST_CASE("kmeans is deterministic and monotone") {
  std::mt19937_64 rng(6);
  const Matrix x = random_matrix(400, 2, rng);
  const auto a = kmeans(x, 5, 99);
  const auto b = kmeans(x, 5, 99);
  CHECK(a.centroids == b.centroids);
  CHECK(a.labels == b.labels);
  for (std::size_t i = 1; i < a.sse_history.size(); ++i) CHECK(a.sse_history[i] <= a.sse_history[i - 1] + 1e-9);
  for (std::size_t i = 0; i < x.rows(); ++i) CHECK(nearest_centroid(a.centroids, x.row(i).data()) == a.labels[i]);
}

TEST_CASE("kmeans with duplicate points keeps every cluster populated") {
  Matrix x(12, 1);
  for (std::size_t i = 0; i < 12; ++i) x(i, 0) = i < 10 ? 0.0 : 5.0 * static_cast<double>(i - 9);
  const auto r = kmeans(x, 3, 1);
  std::vector<std::size_t> counts(3, 0);
  for (auto l : r.labels) ++counts[l];
  for (auto c : counts) CHECK(c > 0);
}
