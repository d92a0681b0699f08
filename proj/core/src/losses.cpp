#include "fare/losses.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fare/linalg.hpp"
#include "fare/rng.hpp"

namespace fare {

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "farecontrast") return LossKind::kFarecontrast;
  if (name == "sparse_farecontrast") return LossKind::kSparseFarecontrast;
  if (name == "infonce") return LossKind::kInfonce;
  if (name == "fair_infonce_cluster") return LossKind::kFairInfonceCluster;
  if (name == "cclk") return LossKind::kCclk;
  throw std::invalid_argument("unknown loss kind: " + name);
}

std::string loss_kind_to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kFarecontrast: return "farecontrast";
    case LossKind::kSparseFarecontrast: return "sparse_farecontrast";
    case LossKind::kInfonce: return "infonce";
    case LossKind::kFairInfonceCluster: return "fair_infonce_cluster";
    case LossKind::kCclk: return "cclk";
  }
  return "?";
}

void LossConfig::validate() const {
  if (lambda < 0.0) throw std::invalid_argument("LossConfig: lambda must be nonnegative");
  if (clusters < 1) throw std::invalid_argument("LossConfig: clusters must be >= 1");
  kernel.validate();
}

namespace {

// (1/b) sum_i [log(d_i + o_i) - log(d_i)] with d = diag(U).
Var log_ratio_loss(Tape& tape, Var u, Var o) {
  const std::size_t b = tape.value(u).rows();
  Var d = tape.diag(u);
  Var term = tape.sub(tape.log(tape.add(d, o)), tape.log(d));
  return tape.scale(tape.sum(term), 1.0 / static_cast<double>(b));
}

std::shared_ptr<const RowSupports> off_diagonal_supports(std::size_t b) {
  RowSupports s(b);
  for (std::size_t i = 0; i < b; ++i) {
    s[i].reserve(b - 1);
    for (std::size_t j = 0; j < b; ++j) {
      if (j != i) s[i].push_back(j);
    }
  }
  return std::make_shared<const RowSupports>(std::move(s));
}

}  // namespace

Var farecontrast_loss(Tape& tape, Var u, Var o) {
  const Matrix& uv = tape.value(u);
  const Matrix& ov = tape.value(o);
  if (uv.rows() != uv.cols() || ov.rows() != uv.rows() || ov.cols() != 1) {
    throw std::invalid_argument("farecontrast_loss: U is " + uv.shape_str() + " but o is " +
                                ov.shape_str());
  }
  return log_ratio_loss(tape, u, o);
}

Var infonce_loss(Tape& tape, Var u) {
  const Matrix& uv = tape.value(u);
  if (uv.rows() != uv.cols()) {
    throw std::invalid_argument("infonce_loss: U must be square, got " + uv.shape_str());
  }
  if (uv.rows() < 2) {
    throw std::invalid_argument("infonce_loss: batch of " + std::to_string(uv.rows()) +
                                " has no negative samples");
  }
  Var o = tape.masked_row_sum(u, off_diagonal_supports(uv.rows()));
  return log_ratio_loss(tape, u, o);
}

KmeansResult kmeans(const Matrix& z, std::size_t clusters, std::uint64_t seed,
                    std::size_t iterations) {
  const std::size_t n = z.rows();
  if (clusters < 1) throw std::invalid_argument("kmeans: clusters must be >= 1");
  clusters = std::min(clusters, n);

  // Farthest-point initialization: seeded first pick, then greedy argmax of
  // the distance to the nearest chosen center (ties toward the lowest index).
  Rng rng(seed);
  std::vector<std::size_t> center_idx;
  center_idx.push_back(rng.below(n));
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (center_idx.size() < clusters) {
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_row_distance(z, i, center_idx.back()));
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (nearest[i] > nearest[best]) best = i;
    }
    center_idx.push_back(best);
  }

  Matrix centers(clusters, z.cols());
  for (std::size_t c = 0; c < clusters; ++c)
    for (std::size_t k = 0; k < z.cols(); ++k) centers(c, k) = z(center_idx[c], k);

  std::vector<std::size_t> assignment(n, 0);
  for (std::size_t it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double best_d = std::numeric_limits<double>::infinity();
      std::size_t best_c = 0;
      for (std::size_t c = 0; c < clusters; ++c) {
        double d = 0.0;
        for (std::size_t k = 0; k < z.cols(); ++k) {
          const double diff = z(i, k) - centers(c, k);
          d += diff * diff;
        }
        if (d < best_d) {
          best_d = d;
          best_c = c;
        }
      }
      assignment[i] = best_c;
    }
    Matrix sums(clusters, z.cols());
    std::vector<std::size_t> counts(clusters, 0);
    for (std::size_t i = 0; i < n; ++i) {
      counts[assignment[i]]++;
      for (std::size_t k = 0; k < z.cols(); ++k) sums(assignment[i], k) += z(i, k);
    }
    for (std::size_t c = 0; c < clusters; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its previous center
      for (std::size_t k = 0; k < z.cols(); ++k)
        centers(c, k) = sums(c, k) / static_cast<double>(counts[c]);
    }
  }
  return KmeansResult{std::move(assignment), std::move(centers)};
}

ClusterLossResult fair_infonce_cluster_loss(Tape& tape, Var u, const Matrix& z,
                                            std::size_t clusters, std::uint64_t seed) {
  const Matrix& uv = tape.value(u);
  const std::size_t b = uv.rows();
  if (uv.rows() != uv.cols() || z.rows() != b) {
    throw std::invalid_argument("fair_infonce_cluster_loss: U is " + uv.shape_str() +
                                " but Z has " + std::to_string(z.rows()) + " rows");
  }
  if (b < 2) {
    throw std::invalid_argument("fair_infonce_cluster_loss: batch of " + std::to_string(b) +
                                " has no negative samples");
  }

  KmeansResult km = kmeans(z, clusters, seed);

  RowSupports negatives(b);
  std::size_t contributing = 0;
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      if (j != i && km.assignment[j] == km.assignment[i]) negatives[i].push_back(j);
    }
    if (!negatives[i].empty()) contributing++;
  }
  if (contributing == 0) {
    throw std::invalid_argument(
        "fair_infonce_cluster_loss: every anchor is alone in its cluster; no trainable signal "
        "(reduce `clusters` or enlarge the batch)");
  }

  auto shared = std::make_shared<const RowSupports>(negatives);

  // Anchors with an empty negative set have o_i = 0, so their log-ratio
  // term is exactly zero; the constant 0/1 row weight keeps them out of the
  // mean without branching in the graph.
  Var o = tape.masked_row_sum(u, shared);
  Var d = tape.diag(u);
  Var term = tape.sub(tape.log(tape.add(d, o)), tape.log(d));
  Matrix weights(b, 1);
  for (std::size_t i = 0; i < b; ++i) weights(i, 0) = negatives[i].empty() ? 0.0 : 1.0;
  Var weighted = tape.hadamard(term, tape.leaf(weights));
  Var loss = tape.scale(tape.sum(weighted), 1.0 / static_cast<double>(contributing));

  ClusterLossResult result;
  result.loss = loss;
  result.contributing = contributing;
  result.skipped = b - contributing;
  result.assignment = std::move(km.assignment);
  result.negatives = shared;
  return result;
}

namespace {

// Solve (K_Z + lambda I) X = K_Z; the smoothed weights are w(z_i, z_j) = X_ij.
Matrix cclk_weights(const Matrix& k_z, double lambda) {
  if (k_z.rows() != k_z.cols()) {
    throw std::invalid_argument("cclk_score: K_Z must be square, got " + k_z.shape_str());
  }
  if (lambda < 0.0) throw std::invalid_argument("cclk_score: lambda must be nonnegative");
  Matrix regularized = k_z;
  for (std::size_t i = 0; i < k_z.rows(); ++i) regularized(i, i) += lambda;
  return cholesky_solve(regularized, k_z);
}

}  // namespace

Var cclk_score(Tape& tape, Var u, const Matrix& k_z, double lambda) {
  const Matrix& uv = tape.value(u);
  if (uv.rows() != k_z.rows()) {
    throw std::invalid_argument("cclk_score: U is " + uv.shape_str() + " but K_Z is " +
                                k_z.shape_str());
  }
  // o_i = row_i(U) . col_i(X) with X the solve result.
  const Matrix weights_t = transpose(cclk_weights(k_z, lambda));
  return tape.row_dot(u, tape.leaf(weights_t));
}

std::vector<double> cclk_score(const Matrix& u, const Matrix& k_z, double lambda) {
  Tape tape;
  return tape.value(cclk_score(tape, tape.leaf(u), k_z, lambda)).values();
}

Var cclk_loss(Tape& tape, Var u, const Matrix& k_z, double lambda) {
  Var o = cclk_score(tape, u, k_z, lambda);
  return log_ratio_loss(tape, u, o);
}

double farecontrast_loss_value(const Matrix& u, const std::vector<double>& o) {
  Tape tape;
  Var ov = tape.leaf(Matrix(o.size(), 1, o));
  return tape.value(farecontrast_loss(tape, tape.leaf(u), ov))(0, 0);
}

double infonce_loss_value(const Matrix& u) {
  Tape tape;
  return tape.value(infonce_loss(tape, tape.leaf(u)))(0, 0);
}

double cclk_loss_value(const Matrix& u, const Matrix& k_z, double lambda) {
  Tape tape;
  return tape.value(cclk_loss(tape, tape.leaf(u), k_z, lambda))(0, 0);
}

}  // namespace fare
