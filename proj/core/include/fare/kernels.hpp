#pragma once

#include <string>

#include "fare/matrix.hpp"

namespace fare {

enum class KernelKind { kCosine, kRbf, kLinear, kPolynomial, kLaplacian };

struct KernelSpec {
  KernelKind kind = KernelKind::kRbf;
  // Bandwidth for rbf/laplacian. Non-positive means "use the median
  // pairwise distance heuristic".
  double bandwidth = 0.0;
  std::size_t degree = 2;  // polynomial
  double offset = 1.0;     // polynomial

  void validate() const;
};

KernelKind kernel_kind_from_string(const std::string& name);
std::string kernel_kind_to_string(KernelKind kind);

// Symmetric b x b kernel matrix over protected-attribute rows.
// rbf:        exp(-|zi - zj|^2 / (2 s^2))
// laplacian:  exp(-|zi - zj|_1 / s)
// cosine:     normalized dot product (zero rows rejected)
// linear:     zi . zj
// polynomial: (zi . zj + offset)^degree
Matrix kernel_matrix(const Matrix& z, const KernelSpec& spec);

// W[i][j] = exp(-|zi - zj|^2 / 2 sigma^2). The Gaussian normalizing
// constant is dropped; it cancels in every ratio this library forms.
Matrix gaussian_weights(const Matrix& z, double sigma);

// Median heuristic used when a bandwidth is unspecified: the median of the
// strictly-positive pairwise distances (Euclidean or L1), falling back to
// 1.0 when all points coincide.
double median_pairwise_distance(const Matrix& z, bool l1);

}  // namespace fare
