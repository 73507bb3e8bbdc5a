#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace rvae {

/// Dense row-major matrix of doubles. Rows are samples wherever a matrix
/// represents a batch.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix row(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row_span(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row_span(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const;
  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// a (n x k) * b^T where b is (m x k): result n x m.
Matrix matmul_transposed(const Matrix& a, const Matrix& b);
/// a^T (k x n)^T * b (k x m): result n x m.
Matrix transposed_matmul(const Matrix& a, const Matrix& b);
/// a (n x k) * b (k x m).
Matrix matmul(const Matrix& a, const Matrix& b);

double dot(std::span<const double> a, std::span<const double> b);

/// Solves the square system A x = b by Gaussian elimination with partial
/// pivoting. Throws NumericError when A is singular to working precision.
std::vector<double> solve_linear(Matrix a, std::vector<double> b);

}  // namespace rvae
