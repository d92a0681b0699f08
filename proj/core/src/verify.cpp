#include "fare/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fare/linalg.hpp"
#include "fare/rng.hpp"

namespace fare {

namespace {

Matrix random_similarity(std::size_t b, std::size_t dim, double tau, Rng& rng) {
  const Matrix x = rng.normal_matrix(b, dim);
  const Matrix y = rng.normal_matrix(b, dim);
  return similarity_matrix(x, y, ScoringConfig{tau});
}

Matrix random_unit_rows(std::size_t b, std::size_t d, Rng& rng) {
  return l2_normalize_rows(rng.normal_matrix(b, d));
}

TrainConfig gradcheck_config(LossKind kind, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.loss.kind = kind;
  cfg.loss.clusters = 2;
  cfg.loss.lambda = 1e-2;
  cfg.loss.kernel.kind = KernelKind::kRbf;
  cfg.loss.kernel.bandwidth = 0.7;
  cfg.encoder_hidden = {6};
  cfg.embed_dim = 4;
  cfg.scoring.tau = 0.5;
  cfg.attention.d_k = 3;
  cfg.batch_size = 8;
  cfg.seed = seed;
  if (kind == LossKind::kSparseFarecontrast) {
    LshConfig lsh;
    lsh.rounds = 2;
    lsh.n_buckets = 4;
    lsh.chunk_size = 3;
    lsh.adjacency = ChunkAdjacency::kAdjacent;
    lsh.seed = seed;
    cfg.sparse = lsh;
  }
  return cfg;
}

}  // namespace

GradCheckReport check_loss_gradients(LossKind kind, std::uint64_t seed,
                                     const GradCheckOptions& opts) {
  const TrainConfig cfg = gradcheck_config(kind, seed);
  const std::size_t d_x = 5;
  const std::size_t d_z = 3;

  Rng rng(Rng::mix(seed, 0x9C0DE));
  BatchTriplet batch;
  batch.x = rng.normal_matrix(cfg.batch_size, d_x);
  batch.y = rng.normal_matrix(cfg.batch_size, d_x);
  batch.z = rng.uniform_matrix(cfg.batch_size, d_z, 0.05, 1.0);

  ModelParams model;
  model.encoder = init_encoder({d_x, cfg.encoder_hidden, cfg.embed_dim}, Rng::mix(seed, 0xE));
  model.attention =
      AttentionParams::init(d_z, cfg.attention.d_k, cfg.attention.resolved_rho(),
                            Rng::mix(seed, 0xA));
  model.tau = cfg.scoring.tau;

  const std::uint64_t batch_seed = Rng::mix(seed, 0xBA7C);

  LossGraph graph = build_loss_graph(cfg, model, batch, batch_seed);
  graph.tape.backward(graph.loss);

  GradCheckReport report;
  const double floor = 1e-3;  // absolute scale below which errors read as absolute
  for (const auto& [name, var] : graph.params) {
    Matrix analytic = graph.tape.grad(var);
    if (name == opts.perturb_param && analytic.size() > 0) {
      analytic.data()[0] += opts.perturb_amount;
    }
    ModelParams probe = model;
    Matrix* target = nullptr;
    // graph.params names always resolve against the model layout
    {
      const std::string prefix = "encoder.layer";
      if (name == "attention.w_q") target = &probe.attention.w_q;
      else if (name == "attention.w_k") target = &probe.attention.w_k;
      else {
        const std::size_t dot = name.find('.', prefix.size());
        const std::size_t idx = std::stoul(name.substr(prefix.size(), dot - prefix.size()));
        target = name.substr(dot + 1) == "weight" ? &probe.encoder.layers[idx].weight
                                                  : &probe.encoder.layers[idx].bias;
      }
    }
    for (std::size_t i = 0; i < target->size(); ++i) {
      const double saved = target->data()[i];
      target->data()[i] = saved + opts.step;
      LossGraph plus = build_loss_graph(cfg, probe, batch, batch_seed);
      const double f_plus = plus.tape.value(plus.loss)(0, 0);
      target->data()[i] = saved - opts.step;
      LossGraph minus = build_loss_graph(cfg, probe, batch, batch_seed);
      const double f_minus = minus.tape.value(minus.loss)(0, 0);
      target->data()[i] = saved;

      const double numeric = (f_plus - f_minus) / (2.0 * opts.step);
      const double denom = std::max({std::abs(analytic.data()[i]), std::abs(numeric), floor});
      const double rel = std::abs(analytic.data()[i] - numeric) / denom;
      if (rel > report.worst_rel_error) {
        report.worst_rel_error = rel;
        report.worst_param = name;
      }
    }
  }
  report.ok = report.worst_rel_error <= opts.tolerance;
  return report;
}

namespace {

SuiteResult kde_equivalence_suite(const VerifyOptions& opts) {
  SuiteResult r{"kde-equivalence", SuiteStatus::kPass, ""};
  if (!opts.normalize_z) {
    r.status = SuiteStatus::kSkip;
    r.detail = "z-normalization disabled; the identity requires unit rows";
    return r;
  }
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Rng rng(Rng::mix(0x6DE0ULL, trial));
    const std::size_t b = 32, d_z = 3;
    const Matrix u = random_similarity(b, 8, 0.5, rng);
    const Matrix z = random_unit_rows(b, d_z, rng);
    const double rho = 0.3 + 2.5 * rng.uniform();
    const AttentionParams identity = AttentionParams::identity(d_z, rho);
    const Matrix p = attention_scores(z, identity, /*normalize=*/true);
    const std::vector<double> via_attention = attention_output(u, p);
    const std::vector<double> via_kde = kde_conditional_score(u, z, {std::sqrt(rho)});
    for (std::size_t i = 0; i < b; ++i)
      worst = std::max(worst, std::abs(via_attention[i] - via_kde[i]));
  }
  std::ostringstream detail;
  detail << "max |attention - kde| = " << worst << " over 100 instances";
  r.detail = detail.str();
  if (worst > 1e-10) r.status = SuiteStatus::kFail;
  return r;
}

SuiteResult sparse_degenerate_suite() {
  SuiteResult r{"sparse-degenerate", SuiteStatus::kPass, ""};
  double worst_full = 0.0;
  double worst_self = 0.0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Rng rng(Rng::mix(0x5BAD6E, trial));
    const std::size_t b = 16, d_z = 3;
    const Matrix u = random_similarity(b, 8, 0.5, rng);
    const Matrix z = rng.uniform_matrix(b, d_z, 0.05, 1.0);
    const AttentionParams params = AttentionParams::init(d_z, 4, 2.0, rng.next_u64());

    RowSupports full(b);
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < b; ++j) full[i].push_back(j);
    const Matrix p_dense = attention_scores(z, params);
    const Matrix p_sparse = sparse_attention_scores(z, params, full);
    const auto o_dense = attention_output(u, p_dense);
    const auto o_sparse = sparse_attention_output(u, p_sparse);
    for (std::size_t i = 0; i < b; ++i)
      worst_full = std::max(worst_full, std::abs(o_dense[i] - o_sparse[i]));

    RowSupports self_only(b);
    for (std::size_t i = 0; i < b; ++i) self_only[i].push_back(i);
    const Matrix p_self = sparse_attention_scores(z, params, self_only);
    const auto o_self = sparse_attention_output(u, p_self);
    for (std::size_t i = 0; i < b; ++i)
      worst_self = std::max(worst_self, std::abs(o_self[i] - u(i, i)));
  }
  std::ostringstream detail;
  detail << "full-support gap " << worst_full << "; self-only gap " << worst_self;
  r.detail = detail.str();
  if (worst_full > 1e-12 || worst_self != 0.0) r.status = SuiteStatus::kFail;
  return r;
}

SuiteResult gradients_suite(const VerifyOptions& opts) {
  SuiteResult r{"gradients", SuiteStatus::kPass, ""};
  const LossKind kinds[] = {LossKind::kFarecontrast, LossKind::kSparseFarecontrast,
                            LossKind::kInfonce, LossKind::kCclk};
  double worst = 0.0;
  std::string worst_name;
  for (LossKind kind : kinds) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const GradCheckReport report = check_loss_gradients(kind, seed, opts.gradients);
      if (report.worst_rel_error > worst) {
        worst = report.worst_rel_error;
        worst_name = loss_kind_to_string(kind) + " / " + report.worst_param;
      }
      if (!report.ok) {
        r.status = SuiteStatus::kFail;
        r.detail = loss_kind_to_string(kind) + ": gradient of " + report.worst_param +
                   " off by relative " + std::to_string(report.worst_rel_error);
        return r;
      }
    }
  }
  std::ostringstream detail;
  detail << "worst relative error " << worst << " (" << worst_name << ")";
  r.detail = detail.str();
  return r;
}

SuiteResult mask_exactness_suite() {
  SuiteResult r{"mask-exactness", SuiteStatus::kPass, ""};
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    Rng rng(Rng::mix(0x3A5C, trial));
    const std::size_t b = 12, d_z = 3;
    const Matrix z = rng.uniform_matrix(b, d_z, 0.05, 1.0);
    LshConfig cfg;
    cfg.rounds = 2;
    cfg.n_buckets = 4;
    cfg.chunk_size = 3;
    cfg.adjacency = ChunkAdjacency::kNone;
    cfg.seed = rng.next_u64();
    const RowSupports supports = build_supports(z, cfg);
    const AttentionParams params = AttentionParams::init(d_z, 4, 2.0, rng.next_u64());
    const Matrix p = sparse_attention_scores(z, params, supports);
    for (std::size_t i = 0; i < b; ++i) {
      std::vector<bool> on(b, false);
      double row_sum = 0.0;
      for (std::size_t j : supports[i]) {
        on[j] = true;
        row_sum += p(i, j);
      }
      for (std::size_t j = 0; j < b; ++j) {
        if (!on[j] && p(i, j) != 0.0) {
          r.status = SuiteStatus::kFail;
          r.detail = "off-support entry (" + std::to_string(i) + "," + std::to_string(j) +
                     ") = " + std::to_string(p(i, j));
          return r;
        }
      }
      if (std::abs(row_sum - 1.0) > 1e-9) {
        r.status = SuiteStatus::kFail;
        r.detail = "support row " + std::to_string(i) + " sums to " + std::to_string(row_sum);
        return r;
      }
    }
  }
  r.detail = "off-support entries exactly zero; support rows stochastic";
  return r;
}

// Gauss-Jordan inverse; deliberately a different algorithm from the
// Cholesky route it cross-checks.
Matrix gauss_jordan_inverse(Matrix a) {
  const std::size_t n = a.rows();
  Matrix inv = Matrix::identity(n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r2 = col + 1; r2 < n; ++r2)
      if (std::abs(a(r2, col)) > std::abs(a(pivot, col))) pivot = r2;
    if (a(pivot, col) == 0.0) throw std::runtime_error("gauss_jordan_inverse: singular matrix");
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(a(col, j), a(pivot, j));
        std::swap(inv(col, j), inv(pivot, j));
      }
    }
    const double d = a(col, col);
    for (std::size_t j = 0; j < n; ++j) {
      a(col, j) /= d;
      inv(col, j) /= d;
    }
    for (std::size_t r2 = 0; r2 < n; ++r2) {
      if (r2 == col) continue;
      const double f = a(r2, col);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        a(r2, j) -= f * a(col, j);
        inv(r2, j) -= f * inv(col, j);
      }
    }
  }
  return inv;
}

SuiteResult cclk_oracle_suite() {
  SuiteResult r{"cclk-oracle", SuiteStatus::kPass, ""};
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    Rng rng(Rng::mix(0xCC1D, trial));
    const std::size_t b = 3 + rng.below(6);  // 3..8
    const Matrix u = random_similarity(b, 6, 0.5, rng);
    const Matrix a = rng.normal_matrix(b, b);
    Matrix k_z = matmul_nt(a, a);  // SPD up to rank; regularize lightly
    for (std::size_t i = 0; i < b; ++i) k_z(i, i) += 0.5;
    const double lambda = 0.05 + rng.uniform();

    const std::vector<double> via_solve = cclk_score(u, k_z, lambda);

    Matrix shifted = k_z;
    for (std::size_t i = 0; i < b; ++i) shifted(i, i) += lambda;
    const Matrix product = matmul(matmul(u, gauss_jordan_inverse(shifted)), k_z);
    for (std::size_t i = 0; i < b; ++i)
      worst = std::max(worst, std::abs(via_solve[i] - product(i, i)));
  }

  // analytic identities at K_Z = I
  Rng rng(0xCC1D2);
  const Matrix u = random_similarity(5, 6, 0.5, rng);
  const Matrix eye = Matrix::identity(5);
  const auto o_zero = cclk_score(u, eye, 0.0);
  const auto o_one = cclk_score(u, eye, 1.0);
  double worst_identity = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    worst_identity = std::max(worst_identity, std::abs(o_zero[i] - u(i, i)));
    worst_identity = std::max(worst_identity, std::abs(o_one[i] - 0.5 * u(i, i)));
  }

  std::ostringstream detail;
  detail << "inverse-oracle gap " << worst << "; identity gap " << worst_identity;
  r.detail = detail.str();
  if (worst > 1e-8 || worst_identity > 1e-12) r.status = SuiteStatus::kFail;
  return r;
}

SuiteResult uniform_reduction_suite() {
  SuiteResult r{"uniform-reduction", SuiteStatus::kPass, ""};
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Rng rng(Rng::mix(0x0F14, trial));
    const std::size_t b = 2 + rng.below(15);
    const Matrix u = random_similarity(b, 8, 0.5, rng);
    Matrix z(b, 3);
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < 3; ++j) z(i, j) = 0.4 + 0.1 * static_cast<double>(j);

    const AttentionParams params = AttentionParams::init(3, 4, 2.0, rng.next_u64());
    const Matrix p = attention_scores(z, params);
    const double loss = farecontrast_loss_value(u, attention_output(u, p));

    // mean-negative form of the InfoNCE expression (negatives replaced by
    // the mean over all j, j = i included)
    double direct = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      double mean = 0.0;
      for (std::size_t j = 0; j < b; ++j) mean += u(i, j);
      mean /= static_cast<double>(b);
      direct += -std::log(u(i, i) / (u(i, i) + mean));
    }
    direct /= static_cast<double>(b);
    worst = std::max(worst, std::abs(loss - direct));
  }
  std::ostringstream detail;
  detail << "max |attention-loss - mean-form| = " << worst;
  r.detail = detail.str();
  if (worst > 1e-12) r.status = SuiteStatus::kFail;
  return r;
}

SuiteResult value_collapse_suite() {
  SuiteResult r{"value-collapse", SuiteStatus::kPass, ""};
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    Rng rng(Rng::mix(0xC0114, trial));
    const std::size_t b = 8;
    const Matrix u = random_similarity(b, 8, 0.5, rng);
    const Matrix z = rng.uniform_matrix(b, 3, 0.05, 1.0);
    const AttentionParams params = AttentionParams::init(3, 4, 2.0, rng.next_u64());

    Tape tape;
    Var uv = tape.leaf(u);
    Var p = attention_scores(tape, tape.leaf(z), tape.leaf(params.w_q), tape.leaf(params.w_k),
                             params.rho);
    Var o = attention_output(tape, uv, p);
    // a scalar value weight w -> 0 zeroes the conditioned negative term and
    // with it the loss; under the maximized (sup) form of the objective the
    // same escape is w -> infinity
    Var loss = farecontrast_loss(tape, uv, tape.scale(o, 1e-12));
    worst = std::max(worst, tape.value(loss)(0, 0));
  }
  std::ostringstream detail;
  detail << "max loss under 1e-12 value weight = " << worst;
  r.detail = detail.str();
  if (!(worst < 1e-9)) r.status = SuiteStatus::kFail;
  return r;
}

}  // namespace

std::vector<SuiteResult> run_verification(const std::vector<std::string>& suites,
                                          const VerifyOptions& opts) {
  const std::vector<std::string> all = {"kde-equivalence", "sparse-degenerate", "gradients",
                                        "mask-exactness",  "cclk-oracle",      "uniform-reduction",
                                        "value-collapse"};
  std::vector<std::string> selected = suites.empty() ? all : suites;
  std::vector<SuiteResult> results;
  for (const std::string& name : selected) {
    if (name == "kde-equivalence") results.push_back(kde_equivalence_suite(opts));
    else if (name == "sparse-degenerate") results.push_back(sparse_degenerate_suite());
    else if (name == "gradients") results.push_back(gradients_suite(opts));
    else if (name == "mask-exactness") results.push_back(mask_exactness_suite());
    else if (name == "cclk-oracle") results.push_back(cclk_oracle_suite());
    else if (name == "uniform-reduction") results.push_back(uniform_reduction_suite());
    else if (name == "value-collapse") results.push_back(value_collapse_suite());
    else throw std::invalid_argument("unknown verification suite: " + name);
  }
  return results;
}

bool all_passed(const std::vector<SuiteResult>& results) {
  return std::all_of(results.begin(), results.end(),
                     [](const SuiteResult& r) { return r.status != SuiteStatus::kFail; });
}

}  // namespace fare
