#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "fare/bench.hpp"
#include "fare/config.hpp"
#include "fare/data.hpp"
#include "fare/train.hpp"
#include "fare/verify.hpp"

using fare::Dataset;
using fare::LossKind;
using fare::Matrix;
using fare::SynthConfig;
using fare::TrainConfig;

namespace {

Dataset small_dataset(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_train = 64;
  cfg.n_test = 16;
  cfg.d_features = 12;
  cfg.n_classes = 4;
  cfg.seed = seed;
  return fare::generate_synthetic(cfg);
}

TrainConfig small_train_config() {
  TrainConfig cfg;
  cfg.loss.kind = LossKind::kFarecontrast;
  cfg.encoder_hidden = {16};
  cfg.embed_dim = 6;
  cfg.attention.d_k = 4;
  cfg.epochs = 2;
  cfg.batch_size = 16;
  cfg.optimizer.learning_rate = 1e-2;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("zero epochs return initialized params and empty history") {
  const Dataset ds = small_dataset(1);
  TrainConfig cfg = small_train_config();
  cfg.epochs = 0;
  const auto artifacts = fare::train(cfg, ds.train);
  CHECK(artifacts.history.empty());
  CHECK(artifacts.model.encoder.layers.size() == 2);
  CHECK(artifacts.model.attention.w_q.rows() == 3);
}

TEST_CASE("two epochs of attention-contrastive training reduce the loss") {
  const Dataset ds = small_dataset(2);
  TrainConfig cfg = small_train_config();
  cfg.epochs = 4;
  const auto artifacts = fare::train(cfg, ds.train);
  REQUIRE(artifacts.history.size() == 4);
  CHECK(artifacts.history.back().loss < artifacts.history.front().loss);
}

TEST_CASE("training is bit-reproducible given the config and dataset") {
  const Dataset ds = small_dataset(3);
  const TrainConfig cfg = small_train_config();
  const auto a = fare::train(cfg, ds.train);
  const auto b = fare::train(cfg, ds.train);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].loss == b.history[i].loss);  // bitwise
    CHECK(a.history[i].lr == b.history[i].lr);
  }
  for (std::size_t l = 0; l < a.model.encoder.layers.size(); ++l) {
    CHECK(fare::max_abs_diff(a.model.encoder.layers[l].weight,
                             b.model.encoder.layers[l].weight) == 0.0);
  }
  CHECK(fare::max_abs_diff(a.model.attention.w_q, b.model.attention.w_q) == 0.0);
}

TEST_CASE("every loss kind trains end to end") {
  const Dataset ds = small_dataset(4);
  for (LossKind kind : {LossKind::kFarecontrast, LossKind::kSparseFarecontrast,
                        LossKind::kInfonce, LossKind::kFairInfonceCluster, LossKind::kCclk}) {
    TrainConfig cfg = small_train_config();
    cfg.loss.kind = kind;
    cfg.loss.clusters = 3;
    cfg.epochs = 1;
    if (kind == LossKind::kSparseFarecontrast) {
      fare::LshConfig lsh;
      lsh.rounds = 2;
      lsh.n_buckets = 4;
      lsh.chunk_size = 4;
      lsh.seed = 9;
      cfg.sparse = lsh;
    }
    const auto artifacts = fare::train(cfg, ds.train);
    CHECK(artifacts.history.size() == 1);
    CHECK(std::isfinite(artifacts.history[0].loss));
  }
}

TEST_CASE("sgd with momentum and self-excluded attention also train") {
  const Dataset ds = small_dataset(10);
  TrainConfig cfg = small_train_config();
  cfg.optimizer.kind = fare::OptimizerKind::kSgdMomentum;
  cfg.optimizer.learning_rate = 1e-3;
  cfg.optimizer.weight_decay = 1e-4;
  cfg.loss.include_self = false;
  cfg.epochs = 3;
  const auto artifacts = fare::train(cfg, ds.train);
  REQUIRE(artifacts.history.size() == 3);
  for (const auto& row : artifacts.history) CHECK(std::isfinite(row.loss));

  TrainConfig sparse = cfg;
  sparse.loss.kind = LossKind::kSparseFarecontrast;
  fare::LshConfig lsh;
  lsh.rounds = 2;
  lsh.n_buckets = 4;
  lsh.chunk_size = 4;
  lsh.seed = 13;
  sparse.sparse = lsh;
  const auto sparse_artifacts = fare::train(sparse, ds.train);
  CHECK(std::isfinite(sparse_artifacts.history.back().loss));
}

TEST_CASE("cosine schedule follows the closed form") {
  fare::OptimizerConfig opt;
  opt.learning_rate = 0.02;
  const std::size_t epochs = 7;
  for (std::size_t e = 0; e < epochs; ++e) {
    const double expected = 0.02 * 0.5 * (1.0 + std::cos(M_PI * double(e) / double(epochs)));
    CHECK(std::abs(fare::scheduled_lr(opt, fare::ScheduleKind::kCosine, e, epochs) - expected) <=
          1e-12);
  }
  CHECK(fare::scheduled_lr(opt, fare::ScheduleKind::kConstant, 3, epochs) == 0.02);
  CHECK(fare::scheduled_lr(opt, fare::ScheduleKind::kCosine, 0, epochs) == 0.02);
}

TEST_CASE("sparse training with a covering chunk matches dense training per step") {
  const Dataset ds = small_dataset(6);
  TrainConfig dense = small_train_config();
  dense.epochs = 3;

  TrainConfig sparse = dense;
  sparse.loss.kind = LossKind::kSparseFarecontrast;
  fare::LshConfig lsh;
  lsh.rounds = 1;
  lsh.n_buckets = 2;
  lsh.chunk_size = dense.batch_size;  // one chunk covers the batch
  lsh.adjacency = fare::ChunkAdjacency::kNone;
  lsh.seed = 21;
  sparse.sparse = lsh;

  const auto a = fare::train(dense, ds.train);
  const auto b = fare::train(sparse, ds.train);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(std::abs(a.history[i].loss - b.history[i].loss) <= 1e-10);
  }
}

TEST_CASE("non-finite loss aborts with epoch and batch diagnostics") {
  const Dataset ds = small_dataset(7);
  TrainConfig cfg = small_train_config();
  // cosine scoring shrugs off any finite parameter scale; it takes updates
  // near the double range to reach inf/inf and a NaN loss
  cfg.optimizer.learning_rate = 1e200;
  cfg.epochs = 5;
  CHECK_THROWS_WITH_AS(fare::train(cfg, ds.train), doctest::Contains("epoch"),
                       std::runtime_error);
}

TEST_CASE("train rejects a dataset smaller than one batch") {
  const Dataset ds = small_dataset(8);
  TrainConfig cfg = small_train_config();
  cfg.batch_size = 1000;
  CHECK_THROWS_AS(fare::train(cfg, ds.train), std::invalid_argument);
}

TEST_CASE("config parsing: round trip and strict key checking") {
  TrainConfig cfg = small_train_config();
  cfg.loss.kind = LossKind::kSparseFarecontrast;
  fare::LshConfig lsh;
  lsh.seed = 77;
  cfg.sparse = lsh;
  const TrainConfig back = fare::train_config_from_json(fare::train_config_to_json(cfg));
  CHECK(back.loss.kind == cfg.loss.kind);
  CHECK(back.batch_size == cfg.batch_size);
  CHECK(back.sparse.has_value());
  CHECK(back.sparse->seed == 77);
  CHECK(back.attention.d_k == cfg.attention.d_k);

  CHECK_THROWS_WITH_AS(
      fare::train_config_from_json(R"({"loss": {"kind": "infonce"}, "bogus": 1})"),
      doctest::Contains("bogus"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      fare::train_config_from_json(R"({"loss": {"kind": "infonce", "warmth": 2}})"),
      doctest::Contains("warmth"), std::invalid_argument);

  const SynthConfig synth = fare::synth_config_from_json(fare::synth_config_to_json(SynthConfig{}));
  CHECK(synth.n_train == SynthConfig{}.n_train);
  CHECK_THROWS_AS(fare::synth_config_from_json(R"({"n_novel": 3})"), std::invalid_argument);
}

TEST_CASE("model params survive the JSON round trip") {
  const Dataset ds = small_dataset(9);
  TrainConfig cfg = small_train_config();
  cfg.epochs = 1;
  const auto artifacts = fare::train(cfg, ds.train);
  const fare::ModelParams back = fare::model_from_json(fare::model_to_json(artifacts.model));
  CHECK(back.tau == artifacts.model.tau);
  CHECK(back.attention.rho == artifacts.model.attention.rho);
  CHECK(fare::max_abs_diff(back.attention.w_q, artifacts.model.attention.w_q) == 0.0);
  for (std::size_t l = 0; l < back.encoder.layers.size(); ++l) {
    CHECK(fare::max_abs_diff(back.encoder.layers[l].weight,
                             artifacts.model.encoder.layers[l].weight) == 0.0);
  }
}

TEST_CASE("history csv carries the exact header") {
  std::vector<fare::HistoryRow> history = {{0, 0.5, 1e-3, 0.01}, {1, 0.4, 5e-4, 0.011}};
  const std::string path = "/tmp/fare_test_history.csv";
  fare::write_history_csv(history, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "epoch,loss,lr,seconds");
  std::string row;
  std::getline(in, row);
  CHECK(row.substr(0, 2) == "0,");
  std::remove(path.c_str());
}

TEST_CASE("bench: one row per mechanism and size, times grow with batch size") {
  const auto rows = fare::run_bench({64, 256}, 3);
  REQUIRE(rows.size() == 6);  // three mechanisms, two sizes

  const std::string path = "/tmp/fare_test_bench.csv";
  fare::write_bench_csv(rows, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "mechanism,batch_size,median_seconds");
  std::size_t lines = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) ++lines;
  }
  CHECK(lines == 6);
  std::remove(path.c_str());

  double fare_small = 0, fare_large = 0;
  for (const auto& row : rows) {
    if (row.mechanism == "fare" && row.batch_size == 64) fare_small = row.median_seconds;
    if (row.mechanism == "fare" && row.batch_size == 256) fare_large = row.median_seconds;
  }
  CHECK(fare_small > 0.0);
  CHECK(fare_large > fare_small);

  CHECK_THROWS_AS(fare::run_bench({256, 64}, 3), std::invalid_argument);  // must ascend
}

TEST_CASE("gradient checker flags an intentionally perturbed gradient") {
  fare::GradCheckOptions opts;
  const auto clean = fare::check_loss_gradients(LossKind::kFarecontrast, 3, opts);
  CHECK(clean.ok);

  opts.perturb_param = "attention.w_q";
  opts.perturb_amount = 1e-2;
  const auto broken = fare::check_loss_gradients(LossKind::kFarecontrast, 3, opts);
  CHECK_FALSE(broken.ok);
  CHECK(broken.worst_param == "attention.w_q");
}

TEST_CASE("verification suites all pass on a fresh build") {
  const auto results = fare::run_verification();
  REQUIRE(results.size() == 7);
  for (const auto& r : results) {
    INFO(r.name, ": ", r.detail);
    CHECK(r.status == fare::SuiteStatus::kPass);
  }
}

TEST_CASE("skipping z-normalization downgrades the KDE suite to SKIP") {
  fare::VerifyOptions opts;
  opts.normalize_z = false;
  const auto results = fare::run_verification({"kde-equivalence"}, opts);
  REQUIRE(results.size() == 1);
  CHECK(results[0].status == fare::SuiteStatus::kSkip);
}
