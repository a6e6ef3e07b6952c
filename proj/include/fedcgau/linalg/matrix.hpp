#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace fedcgau {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  Matrix transposed() const;
  // Rows at the given indices, in that order.
  Matrix select_rows(std::span<const std::size_t> indices) const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// a * b
Matrix matmul(const Matrix& a, const Matrix& b);
// transpose(a) * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a * transpose(b)
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

// Adds v to every row.
void add_row_vector(Matrix& m, std::span<const double> v);
std::vector<double> column_sums(const Matrix& m);
std::vector<double> column_means(const Matrix& m);

double frobenius_norm(const Matrix& m);
double trace(const Matrix& m);
double max_abs(const Matrix& m);
// max |a_ij - a_ji|
double asymmetry(const Matrix& m);
Matrix symmetrized(const Matrix& m);

// Stacks rows of several matrices with equal column counts.
Matrix vstack(std::span<const Matrix> parts);

bool all_finite(const Matrix& m) noexcept;

}  // namespace fedcgau
