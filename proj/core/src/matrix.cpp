#include "fare/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace fare {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  require(data_.size() == rows_ * cols_,
          "Matrix: " + std::to_string(data_.size()) + " values for shape " + shape_str());
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::constant(std::size_t rows, std::size_t cols, double value) {
  Matrix m(rows, cols);
  for (auto& v : m.data_) v = value;
  return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Matrix();
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].size() == m.cols(), "from_rows: ragged row " + std::to_string(i));
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

bool Matrix::is_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Matrix::shape_str() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(),
          "matmul: inner dimensions differ, A is " + a.shape_str() + ", B is " + b.shape_str());
  Matrix c(a.rows(), b.cols());
  // i-k-j loop order: streams over B rows, fast enough for desk-scale sizes.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* ci = c.data() + i * c.cols();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const double* bk = b.data() + k * b.cols();
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(),
          "matmul_nt: inner dimensions differ, A is " + a.shape_str() + ", B^T is " +
              std::to_string(b.cols()) + "x" + std::to_string(b.rows()));
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.data() + i * a.cols();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* bj = b.data() + j * b.cols();
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += ai[k] * bj[k];
      c(i, j) = acc;
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(),
          "matmul_tn: inner dimensions differ, A^T is " + std::to_string(a.cols()) + "x" +
              std::to_string(a.rows()) + ", B is " + b.shape_str());
  Matrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* ak = a.data() + k * a.cols();
    const double* bk = b.data() + k * b.cols();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      double* ci = c.data() + i * c.cols();
      const double aki = ak[i];
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require(a.same_shape(b), "add: shapes differ, " + a.shape_str() + " vs " + b.shape_str());
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] += b.data()[i];
  return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  require(a.same_shape(b), "sub: shapes differ, " + a.shape_str() + " vs " + b.shape_str());
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] -= b.data()[i];
  return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require(a.same_shape(b), "hadamard: shapes differ, " + a.shape_str() + " vs " + b.shape_str());
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] *= b.data()[i];
  return c;
}

Matrix scale(const Matrix& a, double c) {
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= c;
  return out;
}

Matrix softmax_rows(const Matrix& s) {
  Matrix out(s.rows(), s.cols());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    double row_max = s(i, 0);
    for (std::size_t j = 1; j < s.cols(); ++j) row_max = std::max(row_max, s(i, j));
    double denom = 0.0;
    for (std::size_t j = 0; j < s.cols(); ++j) {
      out(i, j) = std::exp(s(i, j) - row_max);
      denom += out(i, j);
    }
    for (std::size_t j = 0; j < s.cols(); ++j) out(i, j) /= denom;
  }
  return out;
}

Matrix l2_normalize_rows(const Matrix& a) {
  Matrix out = a;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double norm = row_norm(a, i);
    if (norm == 0.0) {
      throw std::invalid_argument("l2_normalize_rows: row " + std::to_string(i) +
                                  " is all zero; filter or perturb degenerate inputs");
    }
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) /= norm;
  }
  return out;
}

double row_norm(const Matrix& a, std::size_t i) {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * a(i, j);
  return std::sqrt(acc);
}

double squared_row_distance(const Matrix& a, std::size_t i, std::size_t j) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.cols(); ++k) {
    const double d = a(i, k) - a(j, k);
    acc += d * d;
  }
  return acc;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("max_abs_diff: shapes differ, " + a.shape_str() + " vs " +
                                b.shape_str());
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

double frobenius_norm(const Matrix& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a.data()[i] * a.data()[i];
  return std::sqrt(acc);
}

}  // namespace fare
