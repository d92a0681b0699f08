#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fare/attention.hpp"
#include "fare/matrix.hpp"
#include "fare/rng.hpp"
#include "fare/tape.hpp"

namespace fare {

enum class ChunkAdjacency { kNone, kAdjacent };

struct LshConfig {
  std::size_t rounds = 8;
  std::size_t n_buckets = 8;  // must be even and >= 2
  std::size_t chunk_size = 16;
  ChunkAdjacency adjacency = ChunkAdjacency::kAdjacent;
  std::uint64_t seed = 0;

  void validate() const;
};

// One round's random projection, d_z x (n_buckets / 2), standard-normal
// entries from the seeded stream.
Matrix lsh_round_matrix(std::size_t d_z, std::size_t n_buckets, Rng& rng);

// h(z) = argmax(concat(zR, -zR)); ties break toward the lowest index.
std::size_t lsh_hash(const std::vector<double>& z, const Matrix& r);
std::size_t lsh_hash(const Matrix& z, std::size_t row, const Matrix& r);

// Per round: hash every row, stable-sort indices by (bucket, original
// index), partition the order into chunks of chunk_size, and let each
// index attend to its chunk (plus the previous/next chunk when adjacency
// is kAdjacent, clamped at the ends). The final support is the union over
// rounds; i is always a member of S_i.
RowSupports build_supports(const Matrix& z, const LshConfig& cfg);

// Debug dump, one line per index: "i: j1 j2 j3 ..." sorted ascending.
std::string supports_to_string(const RowSupports& supports);

// Softmax over j in S_i of the attention logits; entries off the support
// are exactly 0.0 (masked entries never enter the normalizing sum).
Var sparse_attention_scores(Tape& tape, Var z, Var w_q, Var w_k, double rho,
                            std::shared_ptr<const RowSupports> supports, bool normalize = true);
Matrix sparse_attention_scores(const Matrix& z, const AttentionParams& params,
                               const RowSupports& supports, bool normalize = true);

// Same reduction as the dense output; off-support terms contribute exactly
// zero because their attention scores are exactly zero.
Var sparse_attention_output(Tape& tape, Var u, Var p);
std::vector<double> sparse_attention_output(const Matrix& u, const Matrix& p);

}  // namespace fare
