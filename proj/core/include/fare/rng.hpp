#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "fare/matrix.hpp"

namespace fare {

// Deterministic random stream. mt19937_64 supplies the bits (fully specified
// by the standard); uniform/normal/integer draws are built on top by hand so
// the same seed yields the same sequence on every standard library.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller with a cached spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Uniform integer in [0, n) via multiply-shift.
  std::size_t below(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<__uint128_t>(next_u64()) * static_cast<__uint128_t>(n)) >> 64);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  Matrix normal_matrix(std::size_t rows, std::size_t cols, double sd = 1.0) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = sd * normal();
    return m;
  }

  Matrix uniform_matrix(std::size_t rows, std::size_t cols, double lo = 0.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = lo + (hi - lo) * uniform();
    return m;
  }

  // splitmix64 step; combines a base seed with a stream tag.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fare
