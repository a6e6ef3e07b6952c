#include "fedcgau/linalg/pca.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedcgau/error.hpp"
#include "fedcgau/linalg/eigen.hpp"

namespace fedcgau {

Pca pca_fit(const Matrix& x, std::size_t num_components) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n < 2) throw DimensionError("pca_fit: need at least 2 samples, got " + std::to_string(n));
  if (num_components == 0 || num_components > std::min(n, d)) {
    throw DimensionError("pca_fit: num_components " + std::to_string(num_components) + " outside [1, " +
                         std::to_string(std::min(n, d)) + "]");
  }

  Pca pca;
  pca.mean = column_means(x);
  Matrix centered = x;
  for (std::size_t r = 0; r < n; ++r) {
    auto row = centered.row(r);
    for (std::size_t c = 0; c < d; ++c) row[c] -= pca.mean[c];
  }
  const Matrix cov = symmetrized((1.0 / static_cast<double>(n - 1)) * matmul_tn(centered, centered));
  pca.total_variance = trace(cov);

  const auto eig = sym_eigen(cov);
  pca.components = Matrix(d, num_components);
  pca.explained_variance.resize(num_components);
  for (std::size_t j = 0; j < num_components; ++j) {
    pca.explained_variance[j] = std::max(eig.values[j], 0.0);
    std::size_t argmax = 0;
    for (std::size_t k = 1; k < d; ++k)
      if (std::abs(eig.vectors(k, j)) > std::abs(eig.vectors(argmax, j))) argmax = k;
    const double sign = eig.vectors(argmax, j) < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < d; ++k) pca.components(k, j) = sign * eig.vectors(k, j);
  }
  return pca;
}

Matrix Pca::project(const Matrix& x) const {
  if (x.cols() != input_dim()) {
    throw DimensionError("Pca::project: expected " + std::to_string(input_dim()) + " columns, got " +
                         std::to_string(x.cols()));
  }
  Matrix centered = x;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = centered.row(r);
    for (std::size_t c = 0; c < x.cols(); ++c) row[c] -= mean[c];
  }
  return matmul(centered, components);
}

std::vector<double> Pca::explained_variance_ratio() const {
  std::vector<double> r(explained_variance.size(), 0.0);
  if (total_variance <= 0.0) return r;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = explained_variance[i] / total_variance;
  return r;
}

}  // namespace fedcgau
