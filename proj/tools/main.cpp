#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fare/bench.hpp"
#include "fare/config.hpp"
#include "fare/data.hpp"
#include "fare/eval.hpp"
#include "fare/train.hpp"
#include "fare/verify.hpp"

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int cmd_gen_data(const std::string& config_path, const std::string& out_dir) {
  const fare::SynthConfig cfg = fare::load_synth_config(config_path);
  const fare::Dataset ds = fare::generate_synthetic(cfg);
  fs::create_directories(out_dir);
  fare::save_csv(ds.train, out_dir + "/train.csv");
  fare::save_csv(ds.test, out_dir + "/test.csv");
  std::cout << "wrote " << ds.train.size() << " train / " << ds.test.size() << " test records to "
            << out_dir << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir) {
  const fare::TrainConfig cfg = fare::load_train_config(config_path);
  const auto records = fare::load_csv(data_dir + "/train.csv");
  fs::create_directories(out_dir);

  // history is flushed per epoch so an aborted run keeps partial records
  std::ofstream history(out_dir + "/history.csv", std::ios::binary);
  if (!history) throw std::runtime_error("cannot open " + out_dir + "/history.csv");
  history << "epoch,loss,lr,seconds\n" << std::flush;

  const fare::RunArtifacts artifacts =
      fare::train(cfg, records, [&](const fare::HistoryRow& row) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.6f\n", row.epoch, row.loss, row.lr,
                      row.seconds);
        history << buf << std::flush;
        std::cout << "epoch " << row.epoch << "  loss " << row.loss << "  lr " << row.lr << "\n";
      });

  fare::save_model(artifacts.model, out_dir + "/model.json");
  std::cout << "model written to " << out_dir << "/model.json\n";
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_dir,
             const std::string& out_path) {
  const fare::ModelParams model = fare::load_model(model_path);
  const auto train_records = fare::load_csv(data_dir + "/train.csv");
  const auto test_records = fare::load_csv(data_dir + "/test.csv");

  fare::MetricsReport report;

  auto t0 = Clock::now();
  const fare::Matrix train_emb = fare::encode(fare::features_matrix(train_records), model.encoder);
  const fare::Matrix test_emb = fare::encode(fare::features_matrix(test_records), model.encoder);
  report.wall_times["embed"] = seconds_since(t0);

  const auto train_labels = fare::labels_vector(train_records);
  const auto test_labels = fare::labels_vector(test_records);

  t0 = Clock::now();
  const auto predictions = fare::linear_probe_predictions(train_emb, train_labels, test_emb);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == test_labels[i]) ++correct;
  report.probe_accuracy = static_cast<double>(correct) / static_cast<double>(predictions.size());
  report.wall_times["probe"] = seconds_since(t0);

  t0 = Clock::now();
  report.bias_mse = fare::bias_removal_mse(train_emb, fare::protected_matrix(train_records),
                                           test_emb, fare::protected_matrix(test_records));
  report.wall_times["bias_mse"] = seconds_since(t0);

  // equalized odds applies only to discrete groups; one-hot protected rows
  // carry the group id as the hot index
  if (fare::protected_is_one_hot(test_records)) {
    t0 = Clock::now();
    fare::GroupedPredictions gp;
    gp.predicted = predictions;
    gp.actual = test_labels;
    gp.group = fare::protected_group_ids(test_records);
    report.equalized_odds = fare::equalized_odds(gp);
    report.wall_times["equalized_odds"] = seconds_since(t0);
  }

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + out_path);
  out << fare::metrics_to_json(report) << "\n";
  std::cout << fare::metrics_to_json(report) << "\n";
  return 0;
}

int cmd_verify(const std::vector<std::string>& suites, bool no_normalize_z) {
  fare::VerifyOptions opts;
  opts.normalize_z = !no_normalize_z;
  const auto results = fare::run_verification(suites, opts);
  for (const auto& r : results) {
    const char* tag = r.status == fare::SuiteStatus::kPass   ? "PASS"
                      : r.status == fare::SuiteStatus::kSkip ? "SKIP"
                                                             : "FAIL";
    std::cout << "[" << tag << "] " << r.name << ": " << r.detail << "\n";
  }
  return fare::all_passed(results) ? 0 : 1;
}

int cmd_bench(const std::string& sizes_arg, std::size_t reps, const std::string& out_path) {
  std::vector<std::size_t> sizes;
  std::stringstream ss(sizes_arg);
  std::string token;
  while (std::getline(ss, token, ',')) sizes.push_back(std::stoul(token));

  const auto rows = fare::run_bench(sizes, reps);
  fare::write_bench_csv(rows, out_path);
  for (const auto& row : rows) {
    std::cout << row.mechanism << " b=" << row.batch_size << "  " << row.median_seconds << " s\n";
  }
  if (sizes.size() >= 2) {
    const bool increasing = fare::cclk_fare_ratio_increasing(rows);
    std::cout << "cclk/fare ratio strictly increasing: " << (increasing ? "yes" : "NO") << "\n";
    // the asymptotic assertion is pinned to the canonical trio; smaller
    // sizes sit in timer noise
    const bool canonical = sizes.size() == 3 && sizes[0] == 256 && sizes[1] == 512 &&
                           sizes[2] == 1024;
    if (canonical && !increasing) return 1;
  }
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness-aware attention for contrastive learning"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_dir, model_path, out_path;
  std::vector<std::string> suites;
  bool no_normalize_z = false;
  std::string sizes = "256,512,1024";
  std::size_t reps = 5;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen->add_option("--config", config_path, "SynthConfig JSON")->required();
  gen->add_option("--out", out_dir, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Train an encoder");
  train->add_option("--config", config_path, "TrainConfig JSON")->required();
  train->add_option("--data", data_dir, "Dataset directory (train.csv)")->required();
  train->add_option("--out", out_dir, "Output directory")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a trained model");
  eval->add_option("--model", model_path, "model.json path")->required();
  eval->add_option("--data", data_dir, "Dataset directory (train.csv, test.csv)")->required();
  eval->add_option("--out", out_path, "metrics.json path")->required();

  auto* verify = app.add_subcommand("verify", "Run the verification suites");
  verify->add_option("--suite", suites, "Suite name (repeatable; default all)");
  verify->add_flag("--no-normalize-z", no_normalize_z,
                   "Skip protected-attribute normalization (KDE suite reports SKIP)");

  auto* bench = app.add_subcommand("bench", "Time the conditioning mechanisms");
  bench->add_option("--sizes", sizes, "Comma-separated batch sizes (ascending)");
  bench->add_option("--reps", reps, "Repetitions per measurement");
  bench->add_option("--out", out_path, "bench.csv path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(config_path, out_dir);
    if (train->parsed()) return cmd_train(config_path, data_dir, out_dir);
    if (eval->parsed()) return cmd_eval(model_path, data_dir, out_path);
    if (verify->parsed()) return cmd_verify(suites, no_normalize_z);
    if (bench->parsed()) return cmd_bench(sizes, reps, out_path);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
