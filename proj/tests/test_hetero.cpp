#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "fedcgau/error.hpp"
#include "fedcgau/hetero/frechet.hpp"

using namespace fedcgau;
using namespace fedcgau::hetero;

namespace {

Matrix random_psd(std::size_t n, std::size_t rank, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix a(n, rank);
  for (double& v : a.values()) v = normal(rng);
  return symmetrized(matmul_nt(a, a));
}

GaussianSummary gaussian(std::vector<double> mean, Matrix cov) { return {std::move(mean), std::move(cov), 100}; }

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

// Direct evaluation: tr((S1 S2)^1/2) as the sum of square roots of the
// eigenvalues of the non-symmetric product.
double oracle_distance(const Eigen::VectorXd& m1, const Eigen::MatrixXd& s1, const Eigen::VectorXd& m2,
                       const Eigen::MatrixXd& s2) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(s1 * s2);
  double cross = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) cross += std::sqrt(std::max(0.0, es.eigenvalues()(i).real()));
  return (m1 - m2).squaredNorm() + s1.trace() + s2.trace() - 2.0 * cross;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> oracle_moments(const Eigen::MatrixXd& x) {
  const Eigen::VectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd c = x.rowwise() - mean.transpose();
  return {mean, (c.transpose() * c) / static_cast<double>(x.rows() - 1)};
}

}  // namespace

TEST_CASE("summaries") {
  const auto two = summarize(Matrix{{0, 0}, {2, 0}});
  CHECK(two.mean == std::vector<double>{1, 0});
  CHECK(two.covariance == Matrix{{2, 0}, {0, 0}});
  CHECK(two.sample_count == 2);

  const auto same = summarize(Matrix{{1, 2}, {1, 2}, {1, 2}});
  for (double v : same.covariance.values()) CHECK(v == 0.0);

  const Matrix four{{1, 2}, {3, 1}, {0, 0}, {4, 5}};
  const auto s = summarize(four);
  CHECK(s.mean[0] == doctest::Approx(2.0));
  CHECK(s.mean[1] == doctest::Approx(2.0));
  // hand sums: dx = (-1, 1, -2, 2), dy = (0, -1, -2, 3)
  CHECK(s.covariance(0, 0) == doctest::Approx(10.0 / 3.0));
  CHECK(s.covariance(1, 1) == doctest::Approx(14.0 / 3.0));
  CHECK(s.covariance(0, 1) == doctest::Approx(9.0 / 3.0));
  CHECK(s.covariance(1, 0) == s.covariance(0, 1));

  CHECK_THROWS_AS(summarize(Matrix{{1, 2}}), InsufficientDataError);
}

TEST_CASE("frechet distance closed-form cases") {
  const auto a = gaussian({0, 0}, Matrix::identity(2));
  CHECK(std::abs(frechet_distance_sq(a, a)) < 1e-8);
  CHECK(frechet_distance_sq(a, gaussian({3, 4}, Matrix::identity(2))) == doctest::Approx(25.0).epsilon(1e-12));
  CHECK(std::abs(frechet_distance_sq(a, gaussian({3, 4}, Matrix::identity(2))) - 25.0) < 1e-8);
  CHECK(std::abs(frechet_distance_sq(gaussian({0}, Matrix{{1}}), gaussian({0}, Matrix{{4}})) - 1.0) < 1e-8);

  CHECK_THROWS_AS(frechet_distance_sq(a, gaussian({0}, Matrix{{1}})), DimensionError);
  CHECK_THROWS_AS(frechet_distance_sq(a, gaussian({0, 0}, Matrix{{1, 0}, {0, -1}})), NotPsdError);
}

TEST_CASE("frechet distance is symmetric and non-negative") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 1 + static_cast<std::size_t>(t % 16);
    const std::size_t r1 = 1 + static_cast<std::size_t>(t % 5), r2 = n + 1;
    std::vector<double> m1(n), m2(n);
    for (auto& v : m1) v = normal(rng);
    for (auto& v : m2) v = normal(rng);
    const auto a = gaussian(m1, random_psd(n, r1, rng));
    const auto b = gaussian(m2, random_psd(n, r2, rng));
    const double ab = frechet_distance_sq(a, b);
    const double ba = frechet_distance_sq(b, a);
    CHECK(ab >= 0.0);
    CHECK(std::abs(ab - ba) <= 1e-8 * std::max(1.0, ab));
  }
}

TEST_CASE("similarity form agrees with the product eigenvalues") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + static_cast<std::size_t>(t % 7);
    const Matrix s1 = random_psd(n, n + 2, rng);
    const Matrix s2 = random_psd(n, n + 1, rng);
    Eigen::EigenSolver<Eigen::MatrixXd> es(to_eigen(s1) * to_eigen(s2));
    double expected = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) expected += std::sqrt(es.eigenvalues()(i).real());
    CHECK(cross_sqrt_trace(s1, s2) == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("gamma") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto sample = [&](std::size_t m, double mx, double my, double sx, double sy, double rho) {
    Matrix x(m, 2);
    for (std::size_t i = 0; i < m; ++i) {
      const double u = normal(rng), v = normal(rng);
      x(i, 0) = mx + sx * u;
      x(i, 1) = my + sy * (rho * u + std::sqrt(1 - rho * rho) * v);
    }
    return x;
  };

  SUBCASE("identical clients") {
    // Constant rows: every summary, pooled or not, is the same point mass.
    const Matrix point(20, 2, 1.5);
    const Matrix constant[] = {point, point, point};
    CHECK(std::abs(gamma(constant).gamma) < 1e-8);
    // Copies of one sample: means agree, covariances differ only by the
    // unbiased divisor, (M-1) for a client vs (2M-1) for the pooled rest.
    const Matrix x = sample(5000, 0, 0, 1, 1, 0);
    const Matrix copies[] = {x, x, x};
    CHECK(gamma(copies).gamma < 1e-6);
  }
  SUBCASE("two clients reduce to the pairwise distance") {
    const Matrix c0 = sample(80, 0, 0, 1, 2, 0.3), c1 = sample(60, 2, -1, 0.5, 1, -0.2);
    const Matrix clients[] = {c0, c1};
    const auto r = gamma(clients);
    const double d01 = frechet_distance_sq(summarize(c0), summarize(c1));
    const double d10 = frechet_distance_sq(summarize(c1), summarize(c0));
    CHECK(r.per_client[0] == doctest::Approx(d01).epsilon(1e-12));
    CHECK(r.per_client[1] == doctest::Approx(d10).epsilon(1e-12));
    CHECK(r.gamma == doctest::Approx((d01 + d10) / 2).epsilon(1e-12));
  }
  SUBCASE("three clients against an independent recomputation") {
    const Matrix c[] = {sample(40, 0, 0, 1, 1, 0.5), sample(70, 5, 1, 2, 0.5, 0.0), sample(55, -3, 4, 0.7, 1.5, -0.6)};
    const auto r = gamma(c);
    double total = 0.0;
    for (int k = 0; k < 3; ++k) {
      Eigen::MatrixXd own = to_eigen(c[k]);
      Eigen::MatrixXd rest(0, 2);
      for (int j = 0; j < 3; ++j) {
        if (j == k) continue;
        Eigen::MatrixXd grown(rest.rows() + c[j].rows(), 2);
        grown << rest, to_eigen(c[j]);
        rest = grown;
      }
      const auto [m1, s1] = oracle_moments(own);
      const auto [m2, s2] = oracle_moments(rest);
      const double d = oracle_distance(m1, s1, m2, s2);
      CHECK(r.per_client[k] == doctest::Approx(d).epsilon(1e-9));
      total += d;
    }
    CHECK(r.gamma == doctest::Approx(total / 3).epsilon(1e-9));
  }
  SUBCASE("errors") {
    const Matrix one[] = {sample(10, 0, 0, 1, 1, 0)};
    CHECK_THROWS_AS(gamma(one), ConfigError);
    const Matrix thin[] = {sample(10, 0, 0, 1, 1, 0), Matrix{{1, 1}}};
    CHECK_THROWS_AS(gamma(thin), InsufficientDataError);
  }
}
