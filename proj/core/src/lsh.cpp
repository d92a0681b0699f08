#include "fare/lsh.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fare/rng.hpp"

namespace fare {

void LshConfig::validate() const {
  if (n_buckets < 2 || n_buckets % 2 != 0) {
    throw std::invalid_argument("LshConfig: n_buckets must be even and >= 2, got " +
                                std::to_string(n_buckets));
  }
  if (rounds < 1) throw std::invalid_argument("LshConfig: rounds must be >= 1");
  if (chunk_size < 1) throw std::invalid_argument("LshConfig: chunk_size must be >= 1");
}

Matrix lsh_round_matrix(std::size_t d_z, std::size_t n_buckets, Rng& rng) {
  return rng.normal_matrix(d_z, n_buckets / 2);
}

std::size_t lsh_hash(const Matrix& z, std::size_t row, const Matrix& r) {
  if (z.cols() != r.rows()) {
    throw std::invalid_argument("lsh_hash: z has " + std::to_string(z.cols()) +
                                " components but R is " + r.shape_str());
  }
  const std::size_t half = r.cols();
  double best = 0.0;
  std::size_t best_idx = 0;
  bool first = true;
  for (std::size_t j = 0; j < 2 * half; ++j) {
    double proj = 0.0;
    const std::size_t col = j < half ? j : j - half;
    for (std::size_t k = 0; k < z.cols(); ++k) proj += z(row, k) * r(k, col);
    if (j >= half) proj = -proj;
    if (first || proj > best) {  // strict '>' breaks ties toward the lowest index
      best = proj;
      best_idx = j;
      first = false;
    }
  }
  return best_idx;
}

std::size_t lsh_hash(const std::vector<double>& z, const Matrix& r) {
  return lsh_hash(Matrix(1, z.size(), z), 0, r);
}

RowSupports build_supports(const Matrix& z, const LshConfig& cfg) {
  cfg.validate();
  const std::size_t b = z.rows();
  if (b == 0) throw std::invalid_argument("build_supports: empty batch");

  std::vector<std::vector<bool>> member(b, std::vector<bool>(b, false));
  Rng rng(cfg.seed);

  for (std::size_t round = 0; round < cfg.rounds; ++round) {
    const Matrix r = lsh_round_matrix(z.cols(), cfg.n_buckets, rng);

    std::vector<std::size_t> bucket(b);
    for (std::size_t i = 0; i < b; ++i) bucket[i] = lsh_hash(z, i, r);

    std::vector<std::size_t> order(b);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t c) { return bucket[a] < bucket[c]; });

    const std::size_t n_chunks = (b + cfg.chunk_size - 1) / cfg.chunk_size;
    for (std::size_t c = 0; c < n_chunks; ++c) {
      const std::size_t lo_chunk =
          (cfg.adjacency == ChunkAdjacency::kAdjacent && c > 0) ? c - 1 : c;
      const std::size_t hi_chunk =
          (cfg.adjacency == ChunkAdjacency::kAdjacent && c + 1 < n_chunks) ? c + 1 : c;
      const std::size_t lo = lo_chunk * cfg.chunk_size;
      const std::size_t hi = std::min(b, (hi_chunk + 1) * cfg.chunk_size);
      const std::size_t self_lo = c * cfg.chunk_size;
      const std::size_t self_hi = std::min(b, (c + 1) * cfg.chunk_size);
      for (std::size_t p = self_lo; p < self_hi; ++p) {
        for (std::size_t q = lo; q < hi; ++q) member[order[p]][order[q]] = true;
      }
    }
  }

  RowSupports supports(b);
  for (std::size_t i = 0; i < b; ++i) {
    member[i][i] = true;  // a query always collides with itself
    for (std::size_t j = 0; j < b; ++j) {
      if (member[i][j]) supports[i].push_back(j);
    }
  }
  return supports;
}

std::string supports_to_string(const RowSupports& supports) {
  std::ostringstream out;
  for (std::size_t i = 0; i < supports.size(); ++i) {
    out << i << ":";
    for (std::size_t j : supports[i]) out << ' ' << j;
    out << '\n';
  }
  return out.str();
}

Var sparse_attention_scores(Tape& tape, Var z, Var w_q, Var w_k, double rho,
                            std::shared_ptr<const RowSupports> supports, bool normalize) {
  if (rho <= 0.0) throw std::invalid_argument("sparse_attention_scores: rho must be positive");
  Var zn = normalize ? tape.l2_normalize_rows(z) : z;
  Var q = tape.matmul(zn, w_q);
  Var k = tape.matmul(zn, w_k);
  Var logits = tape.scale(tape.matmul(q, tape.transpose(k)), 1.0 / rho);
  return tape.masked_softmax_rows(logits, std::move(supports));
}

Matrix sparse_attention_scores(const Matrix& z, const AttentionParams& params,
                               const RowSupports& supports, bool normalize) {
  params.validate();
  Tape tape;
  auto shared = std::make_shared<const RowSupports>(supports);
  return tape.value(sparse_attention_scores(tape, tape.leaf(z), tape.leaf(params.w_q),
                                            tape.leaf(params.w_k), params.rho, shared,
                                            normalize));
}

Var sparse_attention_output(Tape& tape, Var u, Var p) { return attention_output(tape, u, p); }

std::vector<double> sparse_attention_output(const Matrix& u, const Matrix& p) {
  return attention_output(u, p);
}

}  // namespace fare
