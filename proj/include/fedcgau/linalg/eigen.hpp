#pragma once

#include <vector>

#include "fedcgau/linalg/matrix.hpp"

namespace fedcgau {

struct EigenDecomposition {
  std::vector<double> values;  // descending
  Matrix vectors;              // column j pairs with values[j]
};

// Symmetry tolerance applied to inputs: |a_ij - a_ji| <= kSymmetryTol * max(1, max|a|).
inline constexpr double kSymmetryTol = 1e-10;
// Eigenvalues in [-kPsdTol * max(1, max|lambda|), 0) are treated as 0.
inline constexpr double kPsdTol = 1e-10;

// Cyclic Jacobi rotations. Throws DimensionError on non-square or asymmetric input.
EigenDecomposition sym_eigen(const Matrix& a);

// Symmetric square root of a PSD matrix. Throws NotPsdError when an eigenvalue
// is below the PSD tolerance.
Matrix psd_sqrt(const Matrix& a);

// Sum of square roots of the (clamped) eigenvalues, i.e. trace(psd_sqrt(a)).
double psd_sqrt_trace(const Matrix& a);

}  // namespace fedcgau
