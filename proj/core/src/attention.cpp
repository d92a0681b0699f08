#include "fare/attention.hpp"

#include <cmath>
#include <stdexcept>

#include "fare/rng.hpp"

namespace fare {

void AttentionParams::validate() const {
  if (!w_q.same_shape(w_k)) {
    throw std::invalid_argument("AttentionParams: W_Q is " + w_q.shape_str() + " but W_K is " +
                                w_k.shape_str());
  }
  if (rho <= 0.0) throw std::invalid_argument("AttentionParams: rho must be positive");
}

AttentionParams AttentionParams::identity(std::size_t d_z, double rho) {
  AttentionParams p;
  p.w_q = Matrix::identity(d_z);
  p.w_k = Matrix::identity(d_z);
  p.rho = rho;
  return p;
}

AttentionParams AttentionParams::init(std::size_t d_z, std::size_t d_k, double rho,
                                      std::uint64_t seed) {
  Rng rng(seed);
  AttentionParams p;
  const double sd = 1.0 / std::sqrt(static_cast<double>(d_z));
  // One tied draw for both projections: q_i . k_j = z_i^T W W^T z_j is then a
  // positive-semidefinite similarity over the protected attributes, the
  // learned-metric generalization of identity projections. Independent draws
  // would decorrelate the initial attention from z-similarity entirely.
  p.w_q = rng.normal_matrix(d_z, d_k, sd);
  p.w_k = p.w_q;
  p.rho = rho;
  p.validate();
  return p;
}

Var attention_scores(Tape& tape, Var z, Var w_q, Var w_k, double rho, bool normalize) {
  if (rho <= 0.0) throw std::invalid_argument("attention_scores: rho must be positive");
  Var zn = normalize ? tape.l2_normalize_rows(z) : z;
  Var q = tape.matmul(zn, w_q);
  Var k = tape.matmul(zn, w_k);
  Var logits = tape.scale(tape.matmul(q, tape.transpose(k)), 1.0 / rho);
  return tape.softmax_rows(logits);
}

Matrix attention_scores(const Matrix& z, const AttentionParams& params, bool normalize) {
  params.validate();
  Tape tape;
  return tape.value(attention_scores(tape, tape.leaf(z), tape.leaf(params.w_q),
                                     tape.leaf(params.w_k), params.rho, normalize));
}

Var attention_output(Tape& tape, Var u, Var p) {
  const Matrix& uv = tape.value(u);
  const Matrix& pv = tape.value(p);
  if (!uv.same_shape(pv) || uv.rows() != uv.cols()) {
    throw std::invalid_argument("attention_output: U is " + uv.shape_str() + " and P is " +
                                pv.shape_str() + "; both must be b x b");
  }
  return tape.row_dot(u, p);
}

std::vector<double> attention_output(const Matrix& u, const Matrix& p) {
  Tape tape;
  const Matrix o = tape.value(attention_output(tape, tape.leaf(u), tape.leaf(p)));
  return o.values();
}

std::vector<double> kde_conditional_score(const Matrix& u, const Matrix& z, const KdeConfig& cfg) {
  if (cfg.sigma <= 0.0) {
    throw std::invalid_argument("kde_conditional_score: sigma must be positive");
  }
  if (u.rows() != u.cols() || u.rows() != z.rows()) {
    throw std::invalid_argument("kde_conditional_score: U is " + u.shape_str() + " but Z has " +
                                std::to_string(z.rows()) + " rows");
  }
  const double inv_two_sigma_sq = 1.0 / (2.0 * cfg.sigma * cfg.sigma);
  const std::size_t b = u.rows();
  std::vector<double> out(b, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    double numer = 0.0;
    double denom = 0.0;
    for (std::size_t j = 0; j < b; ++j) {
      const double w = std::exp(-squared_row_distance(z, i, j) * inv_two_sigma_sq);
      numer += u(i, j) * w;
      denom += w;
    }
    out[i] = numer / denom;
  }
  return out;
}

}  // namespace fare
