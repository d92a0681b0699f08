#include "fare/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "fare/rng.hpp"

namespace fare {

void OptimizerConfig::validate() const {
  if (learning_rate <= 0.0) throw std::invalid_argument("optimizer: learning rate must be positive");
  if (weight_decay < 0.0) throw std::invalid_argument("optimizer: weight decay must be nonnegative");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw std::invalid_argument("optimizer: betas must lie in [0, 1)");
  }
}

double AttentionInit::resolved_rho() const {
  return rho > 0.0 ? rho : std::sqrt(static_cast<double>(d_k));
}

void TrainConfig::validate() const {
  loss.validate();
  optimizer.validate();
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (embed_dim < 1) throw std::invalid_argument("TrainConfig: embed_dim must be >= 1");
  if (scoring.tau <= 0.0) throw std::invalid_argument("TrainConfig: tau must be positive");
  if (attention.d_k < 1) throw std::invalid_argument("TrainConfig: d_k must be >= 1");
  const bool needs_negatives = loss.kind != LossKind::kFarecontrast &&
                               loss.kind != LossKind::kSparseFarecontrast;
  if (needs_negatives && batch_size < 2) {
    throw std::invalid_argument("TrainConfig: batch_size must be >= 2 for losses with negatives");
  }
  if (loss.kind == LossKind::kSparseFarecontrast) {
    if (!sparse.has_value()) {
      throw std::invalid_argument("TrainConfig: sparse_farecontrast requires the sparse block");
    }
    sparse->validate();
  }
}

double scheduled_lr(const OptimizerConfig& opt, ScheduleKind schedule, std::size_t epoch,
                    std::size_t epochs) {
  if (schedule == ScheduleKind::kConstant || epochs == 0) return opt.learning_rate;
  const double frac = static_cast<double>(epoch) / static_cast<double>(epochs);
  return opt.learning_rate * 0.5 * (1.0 + std::cos(3.141592653589793238462643383279502884 * frac));
}

LossGraph build_loss_graph(const TrainConfig& cfg, const ModelParams& model,
                           const BatchTriplet& batch, std::uint64_t batch_seed) {
  LossGraph g;
  Tape& tape = g.tape;

  EncoderVars enc_vars = encoder_leaves(tape, model.encoder);
  for (std::size_t i = 0; i < enc_vars.layers.size(); ++i) {
    g.params.emplace_back("encoder.layer" + std::to_string(i) + ".weight",
                          enc_vars.layers[i].first);
    g.params.emplace_back("encoder.layer" + std::to_string(i) + ".bias",
                          enc_vars.layers[i].second);
  }

  Var x_emb = encode(tape, tape.leaf(batch.x), enc_vars);
  Var y_emb = encode(tape, tape.leaf(batch.y), enc_vars);
  Var u = similarity_matrix(tape, x_emb, y_emb, cfg.scoring);
  const std::size_t b = batch.x.rows();

  switch (cfg.loss.kind) {
    case LossKind::kFarecontrast: {
      Var wq = tape.leaf(model.attention.w_q);
      Var wk = tape.leaf(model.attention.w_k);
      g.params.emplace_back("attention.w_q", wq);
      g.params.emplace_back("attention.w_k", wk);
      Var z = tape.leaf(batch.z);
      Var p;
      if (cfg.loss.include_self) {
        p = attention_scores(tape, z, wq, wk, model.attention.rho, cfg.attention.normalize_z);
      } else {
        auto supports = std::make_shared<RowSupports>(b);
        for (std::size_t i = 0; i < b; ++i)
          for (std::size_t j = 0; j < b; ++j)
            if (j != i) (*supports)[i].push_back(j);
        Var zn = cfg.attention.normalize_z ? tape.l2_normalize_rows(z) : z;
        Var logits = tape.scale(
            tape.matmul(tape.matmul(zn, wq), tape.transpose(tape.matmul(zn, wk))),
            1.0 / model.attention.rho);
        p = tape.masked_softmax_rows(logits, supports);
      }
      g.loss = farecontrast_loss(tape, u, attention_output(tape, u, p));
      break;
    }
    case LossKind::kSparseFarecontrast: {
      Var wq = tape.leaf(model.attention.w_q);
      Var wk = tape.leaf(model.attention.w_k);
      g.params.emplace_back("attention.w_q", wq);
      g.params.emplace_back("attention.w_k", wk);
      LshConfig lsh = *cfg.sparse;
      lsh.seed = Rng::mix(lsh.seed, batch_seed);
      RowSupports supports = build_supports(batch.z, lsh);
      if (!cfg.loss.include_self) {
        for (std::size_t i = 0; i < b; ++i) {
          auto& s = supports[i];
          s.erase(std::remove(s.begin(), s.end(), i), s.end());
          if (s.empty()) {
            throw std::invalid_argument(
                "sparse_farecontrast: support of " + std::to_string(i) +
                " is empty with include_self off; widen chunks or enable include_self");
          }
        }
      }
      Var p = sparse_attention_scores(tape, tape.leaf(batch.z), wq, wk, model.attention.rho,
                                      std::make_shared<const RowSupports>(std::move(supports)),
                                      cfg.attention.normalize_z);
      g.loss = farecontrast_loss(tape, u, attention_output(tape, u, p));
      break;
    }
    case LossKind::kInfonce: {
      g.loss = infonce_loss(tape, u);
      break;
    }
    case LossKind::kFairInfonceCluster: {
      g.loss =
          fair_infonce_cluster_loss(tape, u, batch.z, cfg.loss.clusters, batch_seed).loss;
      break;
    }
    case LossKind::kCclk: {
      const Matrix k_z = kernel_matrix(batch.z, cfg.loss.kernel);
      g.loss = cclk_loss(tape, u, k_z, cfg.loss.lambda);
      break;
    }
  }
  return g;
}

namespace {

// Per-parameter optimizer state, keyed by parameter name.
struct OptState {
  Matrix m;  // first moment / momentum buffer
  Matrix v;  // second moment (adam)
};

class Optimizer {
public:
  Optimizer(const OptimizerConfig& cfg) : cfg_(cfg) {}

  void step(const std::string& name, Matrix& param, const Matrix& grad, double lr) {
    OptState& s = state_[name];
    if (s.m.size() != param.size()) {
      s.m = Matrix(param.rows(), param.cols());
      if (cfg_.kind == OptimizerKind::kAdam) s.v = Matrix(param.rows(), param.cols());
    }
    if (cfg_.kind == OptimizerKind::kAdam) {
      ++steps_[name];
      const double t = static_cast<double>(steps_[name]);
      const double bc1 = 1.0 - std::pow(cfg_.beta1, t);
      const double bc2 = 1.0 - std::pow(cfg_.beta2, t);
      for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = grad.data()[i] + cfg_.weight_decay * param.data()[i];
        s.m.data()[i] = cfg_.beta1 * s.m.data()[i] + (1.0 - cfg_.beta1) * g;
        s.v.data()[i] = cfg_.beta2 * s.v.data()[i] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = s.m.data()[i] / bc1;
        const double vhat = s.v.data()[i] / bc2;
        param.data()[i] -= lr * mhat / (std::sqrt(vhat) + 1e-8);
      }
    } else {
      for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = grad.data()[i] + cfg_.weight_decay * param.data()[i];
        s.m.data()[i] = cfg_.momentum * s.m.data()[i] + g;
        param.data()[i] -= lr * s.m.data()[i];
      }
    }
  }

private:
  OptimizerConfig cfg_;
  std::unordered_map<std::string, OptState> state_;
  std::unordered_map<std::string, std::size_t> steps_;
};

Matrix* named_param(ModelParams& model, const std::string& name) {
  if (name == "attention.w_q") return &model.attention.w_q;
  if (name == "attention.w_k") return &model.attention.w_k;
  const std::string prefix = "encoder.layer";
  if (name.rfind(prefix, 0) == 0) {
    const std::size_t dot = name.find('.', prefix.size());
    const std::size_t idx = std::stoul(name.substr(prefix.size(), dot - prefix.size()));
    const std::string field = name.substr(dot + 1);
    if (field == "weight") return &model.encoder.layers[idx].weight;
    if (field == "bias") return &model.encoder.layers[idx].bias;
  }
  throw std::invalid_argument("unknown parameter: " + name);
}

std::string param_norms(const ModelParams& model) {
  std::ostringstream out;
  for (std::size_t i = 0; i < model.encoder.layers.size(); ++i) {
    out << " |layer" << i << ".weight|=" << frobenius_norm(model.encoder.layers[i].weight);
  }
  out << " |w_q|=" << frobenius_norm(model.attention.w_q)
      << " |w_k|=" << frobenius_norm(model.attention.w_k);
  return out.str();
}

}  // namespace

RunArtifacts train(const TrainConfig& cfg, const std::vector<Record>& dataset,
                   const std::function<void(const HistoryRow&)>& on_epoch) {
  cfg.validate();
  if (dataset.size() < cfg.batch_size) {
    throw std::invalid_argument("train: dataset of " + std::to_string(dataset.size()) +
                                " records cannot fill a batch of " +
                                std::to_string(cfg.batch_size));
  }
  const std::size_t d_x = dataset.front().features.size();
  const std::size_t d_z = dataset.front().protected_attr.size();

  RunArtifacts artifacts;
  EncoderArch arch{d_x, cfg.encoder_hidden, cfg.embed_dim};
  artifacts.model.encoder = init_encoder(arch, Rng::mix(cfg.seed, 0xE4C0DE));
  artifacts.model.attention = AttentionParams::init(d_z, cfg.attention.d_k,
                                                    cfg.attention.resolved_rho(),
                                                    Rng::mix(cfg.seed, 0xA77E47));
  artifacts.model.tau = cfg.scoring.tau;

  Optimizer optimizer(cfg.optimizer);
  const std::size_t n_batches = dataset.size() / cfg.batch_size;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    const double lr = scheduled_lr(cfg.optimizer, cfg.schedule, epoch, cfg.epochs);

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(Rng::mix(cfg.seed, 0x5FF1E + epoch));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t batch_idx = 0; batch_idx < n_batches; ++batch_idx) {
      const std::uint64_t batch_seed = Rng::mix(cfg.seed, epoch * n_batches + batch_idx + 1);

      BatchTriplet batch;
      batch.x = Matrix(cfg.batch_size, d_x);
      batch.y = Matrix(cfg.batch_size, d_x);
      batch.z = Matrix(cfg.batch_size, d_z);
      for (std::size_t i = 0; i < cfg.batch_size; ++i) {
        const Record& rec = dataset[order[batch_idx * cfg.batch_size + i]];
        const Record x = augment(rec, cfg.augment_noise_sd, cfg.augment_dropout,
                                 Rng::mix(batch_seed, 2 * i));
        const Record y = augment(rec, cfg.augment_noise_sd, cfg.augment_dropout,
                                 Rng::mix(batch_seed, 2 * i + 1));
        for (std::size_t j = 0; j < d_x; ++j) {
          batch.x(i, j) = x.features[j];
          batch.y(i, j) = y.features[j];
        }
        for (std::size_t j = 0; j < d_z; ++j) batch.z(i, j) = rec.protected_attr[j];
      }

      LossGraph graph = build_loss_graph(cfg, artifacts.model, batch, batch_seed);
      const double loss_value = graph.tape.value(graph.loss)(0, 0);
      if (!std::isfinite(loss_value)) {
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(batch_idx) + ";" +
                                 param_norms(artifacts.model));
      }
      loss_sum += loss_value;

      graph.tape.backward(graph.loss);
      for (const auto& [name, var] : graph.params) {
        optimizer.step(name, *named_param(artifacts.model, name), graph.tape.grad(var), lr);
      }
    }

    const auto epoch_end = std::chrono::steady_clock::now();
    HistoryRow row{epoch, loss_sum / static_cast<double>(n_batches), lr,
                   std::chrono::duration<double>(epoch_end - epoch_start).count()};
    artifacts.history.push_back(row);
    if (on_epoch) on_epoch(row);
  }
  return artifacts;
}

void write_history_csv(const std::vector<HistoryRow>& history, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_history_csv: cannot open " + path);
  out << "epoch,loss,lr,seconds\n";
  char buf[128];
  for (const HistoryRow& row : history) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.6f\n", row.epoch, row.loss, row.lr,
                  row.seconds);
    out << buf;
  }
}

std::string model_to_json(const ModelParams& model) {
  nlohmann::json j;
  j["encoder"] = nlohmann::json::parse(encoder_to_json(model.encoder));
  j["attention"]["w_q"] = {{"rows", model.attention.w_q.rows()},
                           {"cols", model.attention.w_q.cols()},
                           {"values", model.attention.w_q.values()}};
  j["attention"]["w_k"] = {{"rows", model.attention.w_k.rows()},
                           {"cols", model.attention.w_k.cols()},
                           {"values", model.attention.w_k.values()}};
  j["attention"]["rho"] = model.attention.rho;
  j["tau"] = model.tau;
  return j.dump();
}

namespace {

Matrix matrix_from_json(const nlohmann::json& j) {
  return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                j.at("values").get<std::vector<double>>());
}

}  // namespace

ModelParams model_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  ModelParams model;
  model.encoder = encoder_from_json(j.at("encoder").dump());
  model.attention.w_q = matrix_from_json(j.at("attention").at("w_q"));
  model.attention.w_k = matrix_from_json(j.at("attention").at("w_k"));
  model.attention.rho = j.at("attention").at("rho").get<double>();
  model.tau = j.at("tau").get<double>();
  return model;
}

void save_model(const ModelParams& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  out << model_to_json(model) << '\n';
}

ModelParams load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace fare
