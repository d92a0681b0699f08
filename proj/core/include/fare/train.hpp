#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fare/attention.hpp"
#include "fare/data.hpp"
#include "fare/encoder.hpp"
#include "fare/losses.hpp"
#include "fare/lsh.hpp"

namespace fare {

enum class OptimizerKind { kAdam, kSgdMomentum };
enum class ScheduleKind { kCosine, kConstant };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double momentum = 0.9;  // sgd_momentum

  void validate() const;
};

struct AttentionInit {
  std::size_t d_k = 16;
  // rho <= 0 selects the sqrt(d_k) rule.
  double rho = 0.0;
  bool normalize_z = true;

  double resolved_rho() const;
};

struct TrainConfig {
  LossConfig loss;
  std::optional<LshConfig> sparse;  // required by sparse_farecontrast
  std::vector<std::size_t> encoder_hidden = {64, 64};
  std::size_t embed_dim = 16;
  ScoringConfig scoring;
  AttentionInit attention;
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  OptimizerConfig optimizer;
  ScheduleKind schedule = ScheduleKind::kCosine;
  // Augmentation applied when assembling positive pairs.
  double augment_noise_sd = 0.1;
  double augment_dropout = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ModelParams {
  EncoderParams encoder;
  AttentionParams attention;
  double tau = 0.5;
};

struct HistoryRow {
  std::size_t epoch;
  double loss;
  double lr;
  double seconds;
};

struct RunArtifacts {
  ModelParams model;
  std::vector<HistoryRow> history;
};

// Anchor/positive feature rows plus protected-attribute rows for one batch.
// Rows i of X and Y are two augmentations of the same record; Z row i is
// that record's protected vector, copied exactly.
struct BatchTriplet {
  Matrix x;
  Matrix y;
  Matrix z;
};

// Learning rate at epoch e: cosine is lr * 0.5 * (1 + cos(pi e / epochs)).
double scheduled_lr(const OptimizerConfig& opt, ScheduleKind schedule, std::size_t epoch,
                    std::size_t epochs);

// Deterministic given (cfg, dataset): per epoch, seeded shuffle, full
// batches (a trailing partial batch is dropped), two augmented views per
// record, loss per cfg.loss.kind, gradients, optimizer step. Throws
// std::runtime_error with epoch/batch/parameter-norm diagnostics if the
// loss turns non-finite. `on_epoch`, when set, is invoked after each epoch
// so callers can flush partial history.
RunArtifacts train(const TrainConfig& cfg, const std::vector<Record>& dataset,
                   const std::function<void(const HistoryRow&)>& on_epoch = nullptr);

// One recorded loss evaluation for a prepared batch; shared by the training
// loop and the gradient-check suites.
struct LossGraph {
  Tape tape;
  std::vector<std::pair<std::string, Var>> params;  // name -> leaf
  Var loss;
};
LossGraph build_loss_graph(const TrainConfig& cfg, const ModelParams& model,
                           const BatchTriplet& batch, std::uint64_t batch_seed);

void write_history_csv(const std::vector<HistoryRow>& history, const std::string& path);

std::string model_to_json(const ModelParams& model);
ModelParams model_from_json(const std::string& text);
void save_model(const ModelParams& model, const std::string& path);
ModelParams load_model(const std::string& path);

}  // namespace fare
