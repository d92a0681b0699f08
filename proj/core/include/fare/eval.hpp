#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fare/matrix.hpp"

namespace fare {

struct ProbeConfig {
  std::size_t iterations = 500;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
};

// Multinomial-logistic linear classifier trained by full-batch gradient
// descent on frozen embeddings; returns test accuracy. Training labels must
// span at least two classes.
double linear_probe_accuracy(const Matrix& train_emb, const std::vector<std::size_t>& train_labels,
                             const Matrix& test_emb, const std::vector<std::size_t>& test_labels,
                             const ProbeConfig& cfg = {});

// The probe's argmax predictions on the test set (feeds equalized odds).
std::vector<std::size_t> linear_probe_predictions(const Matrix& train_emb,
                                                  const std::vector<std::size_t>& train_labels,
                                                  const Matrix& test_emb,
                                                  const ProbeConfig& cfg = {});

// Ordinary least squares (intercept, ridge 1e-8 for conditioning) from
// embeddings to protected vectors; returns test MSE averaged over protected
// components. Higher means more sensitive information removed.
double bias_removal_mse(const Matrix& train_emb, const Matrix& train_protected,
                        const Matrix& test_emb, const Matrix& test_protected);

struct GroupedPredictions {
  std::vector<std::size_t> predicted;
  std::vector<std::size_t> actual;
  std::vector<std::size_t> group;

  void validate() const;
};

// max over group pairs of the average over (y, yhat) cells of
// |P_{s_i}(Yhat = yhat | Y = y) - P_{s_j}(Yhat = yhat | Y = y)|.
// A single group yields 0 (max over an empty pair set). Each group must
// cover every true label present overall; otherwise the conditional is
// undefined and the offending (group, label) is reported.
double equalized_odds(const GroupedPredictions& gp);

struct MetricsReport {
  double probe_accuracy = 0.0;
  double bias_mse = 0.0;
  std::optional<double> equalized_odds;
  std::map<std::string, double> wall_times;  // stage -> seconds
};

std::string metrics_to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const std::string& text);

}  // namespace fare
