#pragma once

#include "fare/matrix.hpp"

namespace fare {

// Solves A X = B for symmetric positive definite A via Cholesky.
// Throws std::runtime_error with a conditioning diagnostic (the failing
// pivot) when A is not numerically positive definite.
Matrix cholesky_solve(const Matrix& a, const Matrix& b);

// Fits Y ~ [X, 1] by ridge-regularized least squares (the ridge also covers
// the intercept; it exists for conditioning only). Returns the
// (d+1) x m coefficient matrix, last row the intercept.
Matrix ridge_least_squares(const Matrix& x, const Matrix& y, double ridge);

// Applies coefficients from ridge_least_squares to new inputs.
Matrix affine_predict(const Matrix& x, const Matrix& coef);

// Mean of squared residuals over all entries of Y.
double mean_squared_error(const Matrix& predicted, const Matrix& actual);

}  // namespace fare
