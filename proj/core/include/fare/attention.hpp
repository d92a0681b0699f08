#pragma once

#include <cstdint>
#include <vector>

#include "fare/matrix.hpp"
#include "fare/tape.hpp"

namespace fare {

// Query/key projections over protected attributes. There is deliberately no
// value projection: a learnable value weight lets the optimizer zero the
// conditioned negative term instead of learning representations (the
// regression test in the loss suite demonstrates the collapse).
struct AttentionParams {
  Matrix w_q;  // d_z x d_k
  Matrix w_k;  // d_z x d_k
  double rho = 1.0;

  void validate() const;
  static AttentionParams identity(std::size_t d_z, double rho);
  // Entries drawn with standard deviation 1/sqrt(d_z); keeps initial
  // attention near uniform.
  static AttentionParams init(std::size_t d_z, std::size_t d_k, double rho, std::uint64_t seed);
};

struct KdeConfig {
  double sigma = 1.0;  // Gaussian bandwidth
};

// P[i][j] = softmax_j((W_Q z_i)^T (W_K z_j) / rho). When `normalize` is set
// the protected-attribute rows are L2-normalized first (the default
// throughout training).
Var attention_scores(Tape& tape, Var z, Var w_q, Var w_k, double rho, bool normalize = true);
Matrix attention_scores(const Matrix& z, const AttentionParams& params, bool normalize = true);

// o_i = sum_j P[i][j] * U[i][j]: an elementwise product followed by a row
// reduction, not a matrix product — U is indexed by both i and j.
Var attention_output(Tape& tape, Var u, Var p);
std::vector<double> attention_output(const Matrix& u, const Matrix& p);

// Conditioned score computed straight from Gaussian densities with no
// learned projection:
//   o_i = sum_j U[i][j] w_ij / sum_j w_ij,  w_ij = exp(-|z_i - z_j|^2 / 2 sigma^2).
// Serves as the independent reference for the attention path: with
// L2-normalized Z, identity projections and sigma^2 = rho the two agree.
std::vector<double> kde_conditional_score(const Matrix& u, const Matrix& z, const KdeConfig& cfg);

}  // namespace fare
