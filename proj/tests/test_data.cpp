#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "fare/data.hpp"
#include "fare/linalg.hpp"
#include "fare/rng.hpp"

using fare::Dataset;
using fare::Matrix;
using fare::Record;
using fare::SynthConfig;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/fare_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("generation is a pure function of the config") {
  SynthConfig cfg;
  cfg.n_train = 50;
  cfg.n_test = 20;
  cfg.seed = 7;
  const Dataset a = fare::generate_synthetic(cfg);
  const Dataset b = fare::generate_synthetic(cfg);
  REQUIRE(a.train.size() == 50);
  REQUIRE(a.test.size() == 20);
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train[i].label == b.train[i].label);
    CHECK(a.train[i].features == b.train[i].features);
    CHECK(a.train[i].protected_attr == b.train[i].protected_attr);
  }

  cfg.seed = 8;
  const Dataset c = fare::generate_synthetic(cfg);
  CHECK(a.train[0].features != c.train[0].features);
}

TEST_CASE("protected components stay inside the unit cube") {
  for (double corr : {-0.9, 0.0, 0.9}) {
    SynthConfig cfg;
    cfg.n_train = 200;
    cfg.n_test = 1;
    cfg.correlation = corr;
    cfg.seed = 3;
    const Dataset ds = fare::generate_synthetic(cfg);
    for (const Record& r : ds.train)
      for (double z : r.protected_attr) {
        CHECK(z >= 0.0);
        CHECK(z <= 1.0);
      }
  }
}

TEST_CASE("protected_scale = 0 leaves features uninformative about z") {
  SynthConfig cfg;
  cfg.n_train = 800;
  cfg.n_test = 400;
  cfg.protected_scale = 0.0;
  cfg.correlation = 0.0;
  cfg.seed = 11;
  const Dataset ds = fare::generate_synthetic(cfg);

  // least-squares regressor from features to z, measured on held-out data
  const Matrix coef = fare::ridge_least_squares(fare::features_matrix(ds.train),
                                                fare::protected_matrix(ds.train), 1e-8);
  const Matrix pred = fare::affine_predict(fare::features_matrix(ds.test), coef);
  const Matrix actual = fare::protected_matrix(ds.test);
  const double mse = fare::mean_squared_error(pred, actual);

  double mean = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) mean += actual.data()[i];
  mean /= static_cast<double>(actual.size());
  double var = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double d = actual.data()[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(actual.size());

  CHECK(mse >= 0.9 * var);
}

TEST_CASE("correlation = 0 leaves label and z uncorrelated") {
  SynthConfig cfg;
  cfg.n_train = 2000;
  cfg.n_test = 1;
  cfg.correlation = 0.0;
  cfg.seed = 13;
  const Dataset ds = fare::generate_synthetic(cfg);

  double mean_l = 0.0, mean_z = 0.0;
  for (const Record& r : ds.train) {
    mean_l += static_cast<double>(r.label);
    mean_z += r.protected_attr[0];
  }
  mean_l /= 2000.0;
  mean_z /= 2000.0;
  double cov = 0.0, var_l = 0.0, var_z = 0.0;
  for (const Record& r : ds.train) {
    const double dl = static_cast<double>(r.label) - mean_l;
    const double dz = r.protected_attr[0] - mean_z;
    cov += dl * dz;
    var_l += dl * dl;
    var_z += dz * dz;
  }
  const double corr = cov / std::sqrt(var_l * var_z);
  CHECK(std::abs(corr) <= 0.1);
}

TEST_CASE("correlation = 0.9 couples label and z strongly") {
  SynthConfig cfg;
  cfg.n_train = 2000;
  cfg.n_test = 1;
  cfg.correlation = 0.9;
  cfg.seed = 17;
  const Dataset ds = fare::generate_synthetic(cfg);
  double mean_l = 0.0, mean_z = 0.0;
  for (const Record& r : ds.train) {
    mean_l += static_cast<double>(r.label);
    mean_z += r.protected_attr[0];
  }
  mean_l /= 2000.0;
  mean_z /= 2000.0;
  double cov = 0.0, var_l = 0.0, var_z = 0.0;
  for (const Record& r : ds.train) {
    const double dl = static_cast<double>(r.label) - mean_l;
    const double dz = r.protected_attr[0] - mean_z;
    cov += dl * dz;
    var_l += dl * dl;
    var_z += dz * dz;
  }
  CHECK(cov / std::sqrt(var_l * var_z) > 0.8);
}

TEST_CASE("augmentation never touches the label or protected vector") {
  SynthConfig cfg;
  cfg.n_train = 30;
  cfg.n_test = 1;
  cfg.seed = 19;
  const Dataset ds = fare::generate_synthetic(cfg);
  for (std::size_t i = 0; i < ds.train.size(); ++i) {
    const Record aug = fare::augment(ds.train[i], 0.2, 0.1, 1000 + i);
    CHECK(aug.label == ds.train[i].label);
    CHECK(aug.protected_attr == ds.train[i].protected_attr);  // bitwise
    CHECK(aug.features != ds.train[i].features);
  }
}

TEST_CASE("zero noise and zero dropout leave features unchanged") {
  Record rec;
  rec.features = {1.5, -2.5, 0.25};
  rec.label = 3;
  rec.protected_attr = {0.1, 0.9};
  const Record aug = fare::augment(rec, 0.0, 0.0, 5);
  CHECK(aug.features == rec.features);
}

TEST_CASE("csv round trip is the identity at full precision") {
  SynthConfig cfg;
  cfg.n_train = 40;
  cfg.n_test = 1;
  cfg.seed = 23;
  const Dataset ds = fare::generate_synthetic(cfg);

  TempFile tmp("roundtrip.csv");
  fare::save_csv(ds.train, tmp.path);
  const auto loaded = fare::load_csv(tmp.path);
  REQUIRE(loaded.size() == ds.train.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].label == ds.train[i].label);
    CHECK(loaded[i].features == ds.train[i].features);          // bitwise
    CHECK(loaded[i].protected_attr == ds.train[i].protected_attr);
  }
}

TEST_CASE("csv load rejects malformed inputs naming the line") {
  TempFile tmp("bad.csv");

  SUBCASE("header mismatch names the expected header") {
    std::ofstream out(tmp.path);
    out << "a,b,c\n1,2,3\n";
    out.close();
    CHECK_THROWS_WITH_AS(fare::load_csv(tmp.path), doctest::Contains("expected"),
                         std::runtime_error);
  }
  SUBCASE("wrong column count is rejected with its line number") {
    std::ofstream out(tmp.path);
    out << "f0,f1,label,z0\n1.0,2.0,0,0.5\n1.0,2.0,0\n";
    out.close();
    CHECK_THROWS_WITH_AS(fare::load_csv(tmp.path), doctest::Contains("line 3"),
                         std::runtime_error);
  }
  SUBCASE("NaN literal is rejected at its line") {
    std::ofstream out(tmp.path);
    out << "f0,f1,label,z0\n1.0,nan,0,0.5\n";
    out.close();
    CHECK_THROWS_WITH_AS(fare::load_csv(tmp.path), doctest::Contains("line 2"),
                         std::runtime_error);
  }
  SUBCASE("garbage value is rejected") {
    std::ofstream out(tmp.path);
    out << "f0,f1,label,z0\n1.0,oops,0,0.5\n";
    out.close();
    CHECK_THROWS_AS(fare::load_csv(tmp.path), std::runtime_error);
  }
}

TEST_CASE("binary-groups preset produces one-hot protected rows") {
  const SynthConfig cfg = fare::binary_protected_preset(29);
  const Dataset ds = fare::generate_synthetic(cfg);
  CHECK(fare::protected_is_one_hot(ds.train));
  const auto groups = fare::protected_group_ids(ds.train);
  std::size_t zeros = 0;
  for (std::size_t g : groups) {
    CHECK(g < 2);
    if (g == 0) ++zeros;
  }
  CHECK(zeros > 0);
  CHECK(zeros < groups.size());
}

TEST_CASE("one-hot detection is strict") {
  Record continuous;
  continuous.features = {1.0};
  continuous.protected_attr = {0.4, 0.6};
  CHECK_FALSE(fare::protected_is_one_hot({continuous}));

  Record onehot;
  onehot.features = {1.0};
  onehot.protected_attr = {0.0, 1.0};
  CHECK(fare::protected_is_one_hot({onehot}));
}
