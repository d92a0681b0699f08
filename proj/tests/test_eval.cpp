#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fare/eval.hpp"
#include "fare/rng.hpp"

using fare::GroupedPredictions;
using fare::Matrix;
using fare::Rng;

TEST_CASE("probe: one-hot label embeddings are perfectly separable") {
  const std::size_t n = 60, classes = 3;
  Matrix emb(n, classes);
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = i % classes;
    emb(i, labels[i]) = 1.0;
  }
  CHECK(fare::linear_probe_accuracy(emb, labels, emb, labels) == 1.0);
}

TEST_CASE("probe: constant embeddings predict the majority class") {
  const std::size_t n = 90;
  Matrix emb = Matrix::constant(n, 4, 0.5);
  std::vector<std::size_t> labels(n);
  // class 0 holds 60% of both splits
  for (std::size_t i = 0; i < n; ++i) labels[i] = (i % 10) < 6 ? 0 : 1 + (i % 3);
  const double majority = 0.6;
  const double acc = fare::linear_probe_accuracy(emb, labels, emb, labels);
  CHECK(std::abs(acc - majority) <= 0.02);
}

TEST_CASE("probe: random embeddings on balanced classes sit near chance") {
  Rng rng(5);
  const std::size_t n_train = 1000, n_test = 500, classes = 10;
  const Matrix train = rng.normal_matrix(n_train, 16);
  const Matrix test = rng.normal_matrix(n_test, 16);
  std::vector<std::size_t> train_labels(n_train), test_labels(n_test);
  for (std::size_t i = 0; i < n_train; ++i) train_labels[i] = i % classes;
  for (std::size_t i = 0; i < n_test; ++i) test_labels[i] = i % classes;
  const double acc =
      fare::linear_probe_accuracy(train, train_labels, test, test_labels, {200, 0.5, 1});
  CHECK(acc >= 0.05);
  CHECK(acc <= 0.17);
}

TEST_CASE("probe rejects single-class training labels") {
  const Matrix emb = Matrix::constant(10, 3, 1.0);
  const std::vector<std::size_t> labels(10, 2);
  CHECK_THROWS_AS(fare::linear_probe_accuracy(emb, labels, emb, labels), std::invalid_argument);
}

TEST_CASE("probe: label-revealing embeddings beat constant ones") {
  Rng rng(7);
  const std::size_t n = 120, classes = 4;
  std::vector<std::size_t> labels(n);
  Matrix revealing(n, classes + 2);
  Matrix constant = Matrix::constant(n, classes + 2, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = i % classes;
    revealing(i, labels[i]) = 1.0;
    revealing(i, classes) = rng.normal();
  }
  const double acc_rev = fare::linear_probe_accuracy(revealing, labels, revealing, labels);
  const double acc_const = fare::linear_probe_accuracy(constant, labels, constant, labels);
  CHECK(acc_rev > acc_const);
}

TEST_CASE("bias mse: embeddings that contain z recover it almost exactly") {
  Rng rng(9);
  const std::size_t n = 200;
  const Matrix z_train = rng.uniform_matrix(n, 3);
  const Matrix z_test = rng.uniform_matrix(n, 3);
  Matrix emb_train(n, 5), emb_test(n, 5);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      emb_train(i, k) = z_train(i, k);
      emb_test(i, k) = z_test(i, k);
    }
    emb_train(i, 3) = rng.normal();
    emb_test(i, 3) = rng.normal();
    emb_train(i, 4) = 1.7;
    emb_test(i, 4) = 1.7;
  }
  CHECK(fare::bias_removal_mse(emb_train, z_train, emb_test, z_test) < 1e-6);
}

TEST_CASE("bias mse: constant embeddings leave exactly the variance of z") {
  Rng rng(11);
  const std::size_t n = 150;
  const Matrix z = rng.uniform_matrix(n, 3);
  const Matrix emb = Matrix::constant(n, 4, 2.0);

  // population variance per component, averaged, on the same split
  double var = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += z(i, k);
    mean /= static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = z(i, k) - mean;
      acc += d * d;
    }
    var += acc / static_cast<double>(n);
  }
  var /= 3.0;

  const double mse = fare::bias_removal_mse(emb, z, emb, z);
  CHECK(std::abs(mse - var) <= 1e-9);
}

TEST_CASE("bias mse: random embeddings independent of uniform z leave ~1/12") {
  Rng rng(13);
  const std::size_t n_train = 2000, n_test = 1000;
  const Matrix emb_train = rng.normal_matrix(n_train, 16);
  const Matrix emb_test = rng.normal_matrix(n_test, 16);
  const Matrix z_train = rng.uniform_matrix(n_train, 3);
  const Matrix z_test = rng.uniform_matrix(n_test, 3);
  const double mse = fare::bias_removal_mse(emb_train, z_train, emb_test, z_test);
  CHECK(mse >= (1.0 / 12.0) * 0.85);
  CHECK(mse <= (1.0 / 12.0) * 1.15);
}

TEST_CASE("bias mse rejects underdetermined fits") {
  const Matrix emb = Matrix::constant(5, 8, 1.0);
  const Matrix z = Matrix::constant(5, 2, 0.5);
  CHECK_THROWS_AS(fare::bias_removal_mse(emb, z, emb, z), std::invalid_argument);
}

TEST_CASE("bias mse is invariant to invertible linear reparameterization") {
  Rng rng(15);
  const std::size_t n = 300;
  Matrix emb_train = rng.normal_matrix(n, 4);
  Matrix emb_test = rng.normal_matrix(n, 4);
  const Matrix z_train = rng.uniform_matrix(n, 2);
  const Matrix z_test = rng.uniform_matrix(n, 2);

  Matrix transform = rng.normal_matrix(4, 4);
  for (std::size_t i = 0; i < 4; ++i) transform(i, i) += 3.0;  // keep it well-conditioned

  const double base = fare::bias_removal_mse(emb_train, z_train, emb_test, z_test);
  const double mapped = fare::bias_removal_mse(fare::matmul(emb_train, transform), z_train,
                                               fare::matmul(emb_test, transform), z_test);
  CHECK(std::abs(base - mapped) <= 1e-6);
}

namespace {

// rates: group -> P(yhat = 1 | y) for y in {0, 1}, realized with denominators
// of 10 so the probabilities are exact
GroupedPredictions two_group_example() {
  GroupedPredictions gp;
  auto emit = [&](std::size_t group, std::size_t y, std::size_t yhat, std::size_t count) {
    for (std::size_t c = 0; c < count; ++c) {
      gp.group.push_back(group);
      gp.actual.push_back(y);
      gp.predicted.push_back(yhat);
    }
  };
  // group A: P(1|1) = 0.8, P(1|0) = 0.2
  emit(0, 1, 1, 8);
  emit(0, 1, 0, 2);
  emit(0, 0, 1, 2);
  emit(0, 0, 0, 8);
  // group B: P(1|1) = 0.6, P(1|0) = 0.4
  emit(1, 1, 1, 6);
  emit(1, 1, 0, 4);
  emit(1, 0, 1, 4);
  emit(1, 0, 0, 6);
  return gp;
}

}  // namespace

TEST_CASE("equalized odds: the four-cell hand example gives 0.2") {
  const double eo = fare::equalized_odds(two_group_example());
  CHECK(std::abs(eo - 0.2) <= 1e-12);
}

TEST_CASE("equalized odds: identical conditional rates give 0") {
  GroupedPredictions gp;
  for (std::size_t g = 0; g < 2; ++g)
    for (std::size_t y = 0; y < 2; ++y)
      for (std::size_t rep = 0; rep < 5; ++rep) {
        gp.group.push_back(g);
        gp.actual.push_back(y);
        gp.predicted.push_back(rep < 3 ? y : 1 - y);  // same rates in both groups
      }
  CHECK(fare::equalized_odds(gp) == 0.0);
}

TEST_CASE("equalized odds: a single group yields 0") {
  GroupedPredictions gp;
  gp.group = {0, 0, 0, 0};
  gp.actual = {0, 1, 0, 1};
  gp.predicted = {0, 1, 1, 0};
  CHECK(fare::equalized_odds(gp) == 0.0);
}

TEST_CASE("equalized odds rejects undefined conditionals naming the cell") {
  GroupedPredictions gp;
  gp.group = {0, 0, 1};
  gp.actual = {0, 1, 0};  // group 1 never sees label 1
  gp.predicted = {0, 1, 0};
  CHECK_THROWS_WITH_AS(fare::equalized_odds(gp), doctest::Contains("group 1"),
                       std::invalid_argument);
}

TEST_CASE("equalized odds is invariant to group relabeling and sample order") {
  GroupedPredictions gp = two_group_example();
  const double base = fare::equalized_odds(gp);

  GroupedPredictions relabeled = gp;
  for (auto& g : relabeled.group) g = 1 - g;
  CHECK(fare::equalized_odds(relabeled) == base);

  GroupedPredictions reversed;
  for (std::size_t i = gp.group.size(); i-- > 0;) {
    reversed.group.push_back(gp.group[i]);
    reversed.actual.push_back(gp.actual[i]);
    reversed.predicted.push_back(gp.predicted[i]);
  }
  CHECK(fare::equalized_odds(reversed) == base);
}

TEST_CASE("metrics report serializes exactly its fields") {
  fare::MetricsReport report;
  report.probe_accuracy = 0.875;
  report.bias_mse = 0.0421;
  report.equalized_odds = 0.19;
  report.wall_times = {{"embed", 0.5}, {"probe", 1.25}};

  const auto back = fare::metrics_from_json(fare::metrics_to_json(report));
  CHECK(back.probe_accuracy == report.probe_accuracy);
  CHECK(back.bias_mse == report.bias_mse);
  REQUIRE(back.equalized_odds.has_value());
  CHECK(*back.equalized_odds == 0.19);
  CHECK(back.wall_times.at("probe") == 1.25);

  fare::MetricsReport no_eo;
  no_eo.probe_accuracy = 0.5;
  no_eo.bias_mse = 0.1;
  const auto back2 = fare::metrics_from_json(fare::metrics_to_json(no_eo));
  CHECK_FALSE(back2.equalized_odds.has_value());
}
