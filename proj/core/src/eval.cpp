#include "fare/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "fare/linalg.hpp"
#include "fare/rng.hpp"
#include "fare/tape.hpp"

namespace fare {

namespace {

std::size_t count_classes(const std::vector<std::size_t>& labels) {
  std::size_t n = 0;
  for (std::size_t l : labels) n = std::max(n, l + 1);
  return n;
}

// Trains the probe and returns (weights, bias-included coefficient matrix
// is implicit): logits = emb W + b.
std::pair<Matrix, Matrix> train_probe(const Matrix& emb, const std::vector<std::size_t>& labels,
                                      const ProbeConfig& cfg) {
  if (emb.rows() != labels.size()) {
    throw std::invalid_argument("linear_probe: " + std::to_string(emb.rows()) +
                                " embeddings but " + std::to_string(labels.size()) + " labels");
  }
  const std::size_t classes = count_classes(labels);
  std::set<std::size_t> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) {
    throw std::invalid_argument("linear_probe: training labels span a single class");
  }

  Rng rng(cfg.seed);
  Matrix w = rng.normal_matrix(emb.cols(), classes, 0.01);
  Matrix b(1, classes);

  // Cross entropy: mean_i [logsumexp(logits_i) - logits_i[label_i]].
  const double inv_n = 1.0 / static_cast<double>(emb.rows());
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    Tape tape;
    Var wv = tape.leaf(w);
    Var bv = tape.leaf(b);
    Var logits = tape.add_rowvec(tape.matmul(tape.leaf(emb), wv), bv);
    Var lse = tape.row_logsumexp(logits);
    Var picked = tape.gather_rows(logits, labels);
    Var loss = tape.scale(tape.sum(tape.sub(lse, picked)), inv_n);
    tape.backward(loss);
    const Matrix& gw = tape.grad(wv);
    const Matrix& gb = tape.grad(bv);
    for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] -= cfg.learning_rate * gw.data()[i];
    for (std::size_t i = 0; i < b.size(); ++i) b.data()[i] -= cfg.learning_rate * gb.data()[i];
  }
  return {std::move(w), std::move(b)};
}

std::vector<std::size_t> predict(const Matrix& emb, const Matrix& w, const Matrix& b) {
  const Matrix logits = matmul(emb, w);
  std::vector<std::size_t> out(emb.rows(), 0);
  for (std::size_t i = 0; i < emb.rows(); ++i) {
    double best = logits(i, 0) + b(0, 0);
    std::size_t best_c = 0;
    for (std::size_t c = 1; c < w.cols(); ++c) {
      const double v = logits(i, c) + b(0, c);
      if (v > best) {
        best = v;
        best_c = c;
      }
    }
    out[i] = best_c;
  }
  return out;
}

}  // namespace

std::vector<std::size_t> linear_probe_predictions(const Matrix& train_emb,
                                                  const std::vector<std::size_t>& train_labels,
                                                  const Matrix& test_emb,
                                                  const ProbeConfig& cfg) {
  auto [w, b] = train_probe(train_emb, train_labels, cfg);
  return predict(test_emb, w, b);
}

double linear_probe_accuracy(const Matrix& train_emb, const std::vector<std::size_t>& train_labels,
                             const Matrix& test_emb, const std::vector<std::size_t>& test_labels,
                             const ProbeConfig& cfg) {
  if (test_emb.rows() != test_labels.size()) {
    throw std::invalid_argument("linear_probe: test embeddings/labels length mismatch");
  }
  const auto predictions = linear_probe_predictions(train_emb, train_labels, test_emb, cfg);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == test_labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

double bias_removal_mse(const Matrix& train_emb, const Matrix& train_protected,
                        const Matrix& test_emb, const Matrix& test_protected) {
  if (train_emb.rows() != train_protected.rows() || test_emb.rows() != test_protected.rows()) {
    throw std::invalid_argument("bias_removal_mse: embeddings/protected length mismatch");
  }
  if (train_emb.rows() < train_emb.cols() + 1) {
    throw std::invalid_argument("bias_removal_mse: " + std::to_string(train_emb.rows()) +
                                " rows cannot determine " + std::to_string(train_emb.cols() + 1) +
                                " coefficients");
  }
  const Matrix coef = ridge_least_squares(train_emb, train_protected, 1e-8);
  const Matrix predicted = affine_predict(test_emb, coef);
  return mean_squared_error(predicted, test_protected);
}

void GroupedPredictions::validate() const {
  if (predicted.size() != actual.size() || predicted.size() != group.size()) {
    throw std::invalid_argument("GroupedPredictions: predicted/actual/group lengths differ");
  }
  if (predicted.empty()) throw std::invalid_argument("GroupedPredictions: empty");
}

double equalized_odds(const GroupedPredictions& gp) {
  gp.validate();

  std::set<std::size_t> groups_set(gp.group.begin(), gp.group.end());
  const std::vector<std::size_t> groups(groups_set.begin(), groups_set.end());
  if (groups.size() < 2) return 0.0;  // max over an empty pair set

  std::set<std::size_t> label_set(gp.actual.begin(), gp.actual.end());
  std::set<std::size_t> cell_set = label_set;
  cell_set.insert(gp.predicted.begin(), gp.predicted.end());
  const std::vector<std::size_t> true_labels(label_set.begin(), label_set.end());
  const std::vector<std::size_t> cell_labels(cell_set.begin(), cell_set.end());

  // rate[g][y][yhat] = P_g(Yhat = yhat | Y = y)
  std::map<std::size_t, std::map<std::size_t, std::map<std::size_t, double>>> rate;
  for (std::size_t g : groups) {
    for (std::size_t y : true_labels) {
      std::size_t denom = 0;
      std::map<std::size_t, std::size_t> counts;
      for (std::size_t i = 0; i < gp.actual.size(); ++i) {
        if (gp.group[i] == g && gp.actual[i] == y) {
          ++denom;
          counts[gp.predicted[i]]++;
        }
      }
      if (denom == 0) {
        throw std::invalid_argument("equalized_odds: conditional undefined for group " +
                                    std::to_string(g) + ", label " + std::to_string(y));
      }
      for (std::size_t yhat : cell_labels) {
        rate[g][y][yhat] = static_cast<double>(counts[yhat]) / static_cast<double>(denom);
      }
    }
  }

  const double cells = static_cast<double>(true_labels.size() * cell_labels.size());
  double eo = 0.0;
  for (std::size_t a = 0; a < groups.size(); ++a) {
    for (std::size_t b = a + 1; b < groups.size(); ++b) {
      double acc = 0.0;
      for (std::size_t y : true_labels)
        for (std::size_t yhat : cell_labels)
          acc += std::abs(rate[groups[a]][y][yhat] - rate[groups[b]][y][yhat]);
      eo = std::max(eo, acc / cells);
    }
  }
  return eo;
}

std::string metrics_to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["probe_accuracy"] = report.probe_accuracy;
  j["bias_mse"] = report.bias_mse;
  if (report.equalized_odds.has_value()) j["equalized_odds"] = *report.equalized_odds;
  j["wall_times"] = report.wall_times;
  return j.dump(2);
}

MetricsReport metrics_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  MetricsReport report;
  report.probe_accuracy = j.at("probe_accuracy").get<double>();
  report.bias_mse = j.at("bias_mse").get<double>();
  if (j.contains("equalized_odds")) report.equalized_odds = j["equalized_odds"].get<double>();
  report.wall_times = j.at("wall_times").get<std::map<std::string, double>>();
  return report;
}

}  // namespace fare
