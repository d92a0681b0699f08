#include "fare/linalg.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fare {

Matrix cholesky_solve(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("cholesky_solve: A must be square, got " + a.shape_str());
  }
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("cholesky_solve: A is " + a.shape_str() + " but B is " +
                                b.shape_str());
  }
  const std::size_t n = a.rows();

  // Lower-triangular factor, A = L L^T.
  Matrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double acc = a(i, j);
      for (std::size_t k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
      if (i == j) {
        if (acc <= 0.0 || !std::isfinite(acc)) {
          throw std::runtime_error(
              "cholesky_solve: matrix not positive definite at pivot " + std::to_string(i) +
              " (value " + std::to_string(acc) + "); increase the ridge term");
        }
        l(i, i) = std::sqrt(acc);
      } else {
        l(i, j) = acc / l(j, j);
      }
    }
  }

  // Forward then backward substitution, one right-hand side at a time.
  Matrix x(b.rows(), b.cols());
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = b(i, c);
      for (std::size_t k = 0; k < i; ++k) acc -= l(i, k) * x(k, c);
      x(i, c) = acc / l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      double acc = x(i, c);
      for (std::size_t k = i + 1; k < n; ++k) acc -= l(k, i) * x(k, c);
      x(i, c) = acc / l(i, i);
    }
  }
  return x;
}

Matrix ridge_least_squares(const Matrix& x, const Matrix& y, double ridge) {
  if (x.rows() != y.rows()) {
    throw std::invalid_argument("ridge_least_squares: X has " + std::to_string(x.rows()) +
                                " rows but Y has " + std::to_string(y.rows()));
  }
  const std::size_t n = x.rows();
  const std::size_t d = x.cols() + 1;  // intercept column appended

  Matrix design(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) design(i, j) = x(i, j);
    design(i, d - 1) = 1.0;
  }

  Matrix gram = matmul_tn(design, design);
  for (std::size_t i = 0; i < d; ++i) gram(i, i) += ridge;
  const Matrix rhs = matmul_tn(design, y);
  return cholesky_solve(gram, rhs);
}

Matrix affine_predict(const Matrix& x, const Matrix& coef) {
  if (x.cols() + 1 != coef.rows()) {
    throw std::invalid_argument("affine_predict: X is " + x.shape_str() +
                                " but coefficients expect " + std::to_string(coef.rows() - 1) +
                                " features");
  }
  Matrix out(x.rows(), coef.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t c = 0; c < coef.cols(); ++c) {
      double acc = coef(coef.rows() - 1, c);
      for (std::size_t j = 0; j < x.cols(); ++j) acc += x(i, j) * coef(j, c);
      out(i, c) = acc;
    }
  }
  return out;
}

double mean_squared_error(const Matrix& predicted, const Matrix& actual) {
  if (!predicted.same_shape(actual)) {
    throw std::invalid_argument("mean_squared_error: shapes differ, " + predicted.shape_str() +
                                " vs " + actual.shape_str());
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double r = predicted.data()[i] - actual.data()[i];
    acc += r * r;
  }
  return acc / static_cast<double>(predicted.size());
}

}  // namespace fare
