#pragma once

#include <cmath>
#include <vector>

#include "fare/matrix.hpp"
#include "fare/rng.hpp"

namespace testsup {

// Triple-loop product, kept deliberately naive and separate from the
// library's blocked loop order.
inline fare::Matrix matmul_oracle(const fare::Matrix& a, const fare::Matrix& b) {
  fare::Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  return c;
}

// Row softmax evaluated in extended precision without max subtraction.
inline std::vector<double> softmax_oracle(const std::vector<double>& row) {
  long double denom = 0.0L;
  for (double v : row) denom += std::exp(static_cast<long double>(v));
  std::vector<double> out;
  out.reserve(row.size());
  for (double v : row)
    out.push_back(static_cast<double>(std::exp(static_cast<long double>(v)) / denom));
  return out;
}

// Symmetric eigenvalues by cyclic Jacobi rotations; good enough for the
// small PSD spot checks.
inline std::vector<double> symmetric_eigenvalues(fare::Matrix a) {
  const std::size_t n = a.rows();
  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
  return eig;
}

inline double max_abs(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testsup
