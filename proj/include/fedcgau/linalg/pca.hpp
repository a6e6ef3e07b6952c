#pragma once

#include <cstddef>
#include <vector>

#include "fedcgau/linalg/matrix.hpp"

namespace fedcgau {

// Principal components from the eigendecomposition of the sample covariance.
// Each component is sign-normalized so that its largest-magnitude entry is
// positive.
struct Pca {
  std::vector<double> mean;                 // length D
  Matrix components;                        // D x k, orthonormal columns
  std::vector<double> explained_variance;   // length k, descending
  double total_variance = 0.0;              // trace of the covariance

  std::size_t input_dim() const noexcept { return components.rows(); }
  std::size_t num_components() const noexcept { return components.cols(); }

  // (x - mean) * components, row-wise.
  Matrix project(const Matrix& x) const;
  std::vector<double> explained_variance_ratio() const;
};

Pca pca_fit(const Matrix& x, std::size_t num_components);

}  // namespace fedcgau
