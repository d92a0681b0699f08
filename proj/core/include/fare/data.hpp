#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fare/matrix.hpp"

namespace fare {

struct Record {
  std::vector<double> features;
  std::size_t label = 0;
  std::vector<double> protected_attr;  // components in [0, 1]
};

struct SynthConfig {
  std::size_t n_train = 2000;
  std::size_t n_test = 500;
  std::size_t d_features = 32;
  std::size_t n_classes = 10;
  std::size_t d_protected = 3;
  double label_scale = 1.0;
  double protected_scale = 1.0;
  double correlation = 0.0;  // label/protected dependence, in [-1, 1]
  double noise_sd = 0.1;
  // Draw the protected vector one-hot over groups instead of uniform on the
  // cube; feeds the equalized-odds metric (a binary-groups stand-in).
  bool one_hot_protected = false;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Dataset {
  std::vector<Record> train;
  std::vector<Record> test;
};

// features = label_scale * prototype[label] + protected_scale * (z B) + noise.
// z is uniform on [0,1]^d then mixed toward a label-derived point by
// |correlation| (toward its complement when correlation < 0), keeping the
// label/protected dependence controllable. Pure function of the config.
Dataset generate_synthetic(const SynthConfig& cfg);

// Binary-groups preset: two one-hot protected groups, d_protected = 2.
SynthConfig binary_protected_preset(std::uint64_t seed);

// Gaussian feature jitter plus coordinate dropout; the label and protected
// vector are copied exactly (augmentations never change them).
Record augment(const Record& record, double noise_sd, double dropout_rate, std::uint64_t seed);

// CSV with header f0,...,f{d-1},label,z0,...,z{k-1}; decimal text at 17
// significant digits (doubles round-trip exactly), LF endings.
void save_csv(const std::vector<Record>& records, const std::string& path);
std::vector<Record> load_csv(const std::string& path);

// Column views used by training and evaluation.
Matrix features_matrix(const std::vector<Record>& records);
Matrix protected_matrix(const std::vector<Record>& records);
std::vector<std::size_t> labels_vector(const std::vector<Record>& records);

// True when every protected row is exactly one-hot; group id is then the
// hot index (the discrete-groups input the EO metric needs).
bool protected_is_one_hot(const std::vector<Record>& records);
std::vector<std::size_t> protected_group_ids(const std::vector<Record>& records);

}  // namespace fare
