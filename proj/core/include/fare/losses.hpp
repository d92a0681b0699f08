#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "fare/kernels.hpp"
#include "fare/matrix.hpp"
#include "fare/tape.hpp"

namespace fare {

enum class LossKind {
  kFarecontrast,
  kSparseFarecontrast,
  kInfonce,
  kFairInfonceCluster,
  kCclk,
};

LossKind loss_kind_from_string(const std::string& name);
std::string loss_kind_to_string(LossKind kind);

struct LossConfig {
  LossKind kind = LossKind::kFarecontrast;
  // Keep the j == i attention term inside the conditioned negative sum.
  // Off gives the SimCLR-style exclusion for ablation.
  bool include_self = true;
  double lambda = 1e-3;        // cclk ridge
  std::size_t clusters = 10;   // fair_infonce_cluster
  KernelSpec kernel;           // cclk

  void validate() const;
};

// All objectives are the negated log-ratio, minimized:
//   loss = -(1/b) sum_i log(U_ii / (U_ii + o_i))
// with o_i the (conditioned) negative term of each method.

// o produced by the dense or sparse attention output on the same batch.
Var farecontrast_loss(Tape& tape, Var u, Var o);

// o_i = sum_{j != i} U_ij. Requires b >= 2.
Var infonce_loss(Tape& tape, Var u);

// Fixed-iteration k-means over protected attributes; negatives restricted
// to the anchor's cluster. Seeded farthest-point initialization.
struct KmeansResult {
  std::vector<std::size_t> assignment;
  Matrix centers;
};
KmeansResult kmeans(const Matrix& z, std::size_t clusters, std::uint64_t seed,
                    std::size_t iterations = 20);

struct ClusterLossResult {
  Var loss;
  std::size_t contributing = 0;  // anchors with at least one same-cluster negative
  std::size_t skipped = 0;       // anchors alone in their cluster
  std::vector<std::size_t> assignment;
  std::shared_ptr<const RowSupports> negatives;  // per-anchor negative sets
};
ClusterLossResult fair_infonce_cluster_loss(Tape& tape, Var u, const Matrix& z,
                                            std::size_t clusters, std::uint64_t seed);

// o_i = [U (K_Z + lambda I)^{-1} K_Z]_{ii}, computed through a symmetric
// factorization solve. K_Z is data, not a parameter; gradients flow only
// through U.
Var cclk_score(Tape& tape, Var u, const Matrix& k_z, double lambda);
std::vector<double> cclk_score(const Matrix& u, const Matrix& k_z, double lambda);

Var cclk_loss(Tape& tape, Var u, const Matrix& k_z, double lambda);

// Convenience evaluation without gradient tracking.
double farecontrast_loss_value(const Matrix& u, const std::vector<double>& o);
double infonce_loss_value(const Matrix& u);
double cclk_loss_value(const Matrix& u, const Matrix& k_z, double lambda);

}  // namespace fare
