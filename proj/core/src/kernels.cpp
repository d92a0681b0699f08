#include "fare/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace fare {

void KernelSpec::validate() const {
  if (kind == KernelKind::kPolynomial && degree < 1) {
    throw std::invalid_argument("KernelSpec: polynomial degree must be >= 1");
  }
}

KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "cosine") return KernelKind::kCosine;
  if (name == "rbf") return KernelKind::kRbf;
  if (name == "linear") return KernelKind::kLinear;
  if (name == "polynomial") return KernelKind::kPolynomial;
  if (name == "laplacian") return KernelKind::kLaplacian;
  throw std::invalid_argument("unknown kernel kind: " + name);
}

std::string kernel_kind_to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::kCosine: return "cosine";
    case KernelKind::kRbf: return "rbf";
    case KernelKind::kLinear: return "linear";
    case KernelKind::kPolynomial: return "polynomial";
    case KernelKind::kLaplacian: return "laplacian";
  }
  return "?";
}

namespace {

double l1_row_distance(const Matrix& z, std::size_t i, std::size_t j) {
  double acc = 0.0;
  for (std::size_t k = 0; k < z.cols(); ++k) acc += std::abs(z(i, k) - z(j, k));
  return acc;
}

}  // namespace

double median_pairwise_distance(const Matrix& z, bool l1) {
  std::vector<double> d;
  d.reserve(z.rows() * (z.rows() - 1) / 2);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    for (std::size_t j = i + 1; j < z.rows(); ++j) {
      const double dist =
          l1 ? l1_row_distance(z, i, j) : std::sqrt(squared_row_distance(z, i, j));
      if (dist > 0.0) d.push_back(dist);
    }
  }
  if (d.empty()) return 1.0;
  std::sort(d.begin(), d.end());
  return d[d.size() / 2];
}

Matrix kernel_matrix(const Matrix& z, const KernelSpec& spec) {
  spec.validate();
  if (!z.is_finite()) throw std::invalid_argument("kernel_matrix: Z must be finite");
  const std::size_t b = z.rows();
  Matrix k(b, b);

  switch (spec.kind) {
    case KernelKind::kCosine: {
      const Matrix zn = l2_normalize_rows(z);  // rejects zero rows
      for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < b; ++j) {
          double acc = 0.0;
          for (std::size_t c = 0; c < z.cols(); ++c) acc += zn(i, c) * zn(j, c);
          k(i, j) = acc;
        }
      // exact unit diagonal despite rounding in the normalization
      for (std::size_t i = 0; i < b; ++i) k(i, i) = 1.0;
      break;
    }
    case KernelKind::kRbf: {
      const double s = spec.bandwidth > 0.0 ? spec.bandwidth : median_pairwise_distance(z, false);
      const double inv = 1.0 / (2.0 * s * s);
      for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
          const double v = std::exp(-squared_row_distance(z, i, j) * inv);
          k(i, j) = v;
          k(j, i) = v;
        }
      break;
    }
    case KernelKind::kLaplacian: {
      const double s = spec.bandwidth > 0.0 ? spec.bandwidth : median_pairwise_distance(z, true);
      for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
          const double v = std::exp(-l1_row_distance(z, i, j) / s);
          k(i, j) = v;
          k(j, i) = v;
        }
      break;
    }
    case KernelKind::kLinear: {
      for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
          double acc = 0.0;
          for (std::size_t c = 0; c < z.cols(); ++c) acc += z(i, c) * z(j, c);
          k(i, j) = acc;
          k(j, i) = acc;
        }
      break;
    }
    case KernelKind::kPolynomial: {
      for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
          double acc = 0.0;
          for (std::size_t c = 0; c < z.cols(); ++c) acc += z(i, c) * z(j, c);
          const double v = std::pow(acc + spec.offset, static_cast<double>(spec.degree));
          k(i, j) = v;
          k(j, i) = v;
        }
      break;
    }
  }
  return k;
}

Matrix gaussian_weights(const Matrix& z, double sigma) {
  if (sigma <= 0.0) throw std::invalid_argument("gaussian_weights: sigma must be positive");
  const std::size_t b = z.rows();
  const double inv = 1.0 / (2.0 * sigma * sigma);
  Matrix w(b, b);
  for (std::size_t i = 0; i < b; ++i) {
    w(i, i) = 1.0;
    for (std::size_t j = 0; j < i; ++j) {
      const double v = std::exp(-squared_row_distance(z, i, j) * inv);
      w(i, j) = v;
      w(j, i) = v;
    }
  }
  return w;
}

}  // namespace fare
