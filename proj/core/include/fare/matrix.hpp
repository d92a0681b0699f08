#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace fare {

// Dense row-major matrix of 64-bit reals. The only tensor type in the
// library; column vectors are n x 1 matrices. All reductions run in a
// fixed left-to-right order so results are reproducible bit for bit.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Matrix identity(std::size_t n);
  static Matrix constant(std::size_t rows, std::size_t cols, double value);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const std::vector<double>& values() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool is_finite() const;
  std::string shape_str() const;  // e.g. "3x4"

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Plain (non-recorded) helpers shared by oracles, evaluation code, and the
// autodiff tape. Shape mismatches throw std::invalid_argument with a
// diagnostic naming both shapes.
Matrix matmul(const Matrix& a, const Matrix& b);
// matmul variants used for vector-Jacobian products; they avoid
// materializing explicit transposes.
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // A * B^T
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // A^T * B
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double c);

// Row-stochastic softmax with per-row max subtraction.
Matrix softmax_rows(const Matrix& s);
// Each output row has unit Euclidean norm; all-zero rows are rejected.
Matrix l2_normalize_rows(const Matrix& a);

double row_norm(const Matrix& a, std::size_t i);
double squared_row_distance(const Matrix& a, std::size_t i, std::size_t j);
double max_abs_diff(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& a);

}  // namespace fare
