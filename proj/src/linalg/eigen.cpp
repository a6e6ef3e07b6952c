#include "fedcgau/linalg/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fedcgau/error.hpp"

namespace fedcgau {
namespace {

constexpr int kMaxSweeps = 100;

void require_symmetric(const Matrix& a, const char* op) {
  if (a.rows() != a.cols()) {
    throw DimensionError(std::string(op) + ": matrix must be square, got " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()));
  }
  const double tol = kSymmetryTol * std::max(1.0, max_abs(a));
  if (asymmetry(a) > tol) throw DimensionError(std::string(op) + ": matrix is not symmetric");
}

double off_diagonal_sq(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j) s += a(i, j) * a(i, j);
  return s;
}

std::vector<double> clamped_eigenvalues(const EigenDecomposition& e, const char* op) {
  double largest = 0.0;
  for (double v : e.values) largest = std::max(largest, std::abs(v));
  const double scale = std::max(1.0, largest);
  // below this an eigenvalue is rounding noise; its sqrt would not be
  const double floor = static_cast<double>(e.values.size()) * std::numeric_limits<double>::epsilon() * largest;
  std::vector<double> out(e.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = e.values[i];
    if (v < -kPsdTol * scale) {
      throw NotPsdError(std::string(op) + ": eigenvalue " + std::to_string(v) + " is negative");
    }
    out[i] = v > floor ? v : 0.0;
  }
  return out;
}

}  // namespace

EigenDecomposition sym_eigen(const Matrix& input) {
  require_symmetric(input, "sym_eigen");
  const std::size_t n = input.rows();
  Matrix a = symmetrized(input);
  Matrix v = Matrix::identity(n);

  const double total = frobenius_norm(a);
  const double stop = std::pow(1e-16 * total, 2);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    const double off = off_diagonal_sq(a);
    if (off <= stop || off == 0.0) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigenDecomposition out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = v(k, order[j]);
  }
  return out;
}

Matrix psd_sqrt(const Matrix& a) {
  const auto e = sym_eigen(a);
  const auto lambda = clamped_eigenvalues(e, "psd_sqrt");
  const std::size_t n = a.rows();
  // Q * diag(sqrt(lambda)) * Q^T
  Matrix scaled = e.vectors;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j < n; ++j) scaled(k, j) *= std::sqrt(lambda[j]);
  return symmetrized(matmul_nt(scaled, e.vectors));
}

double psd_sqrt_trace(const Matrix& a) {
  const auto e = sym_eigen(a);
  double t = 0.0;
  for (double v : clamped_eigenvalues(e, "psd_sqrt_trace")) t += std::sqrt(v);
  return t;
}

}  // namespace fedcgau
