#include "fare/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>

#include "fare/attention.hpp"
#include "fare/kernels.hpp"
#include "fare/losses.hpp"
#include "fare/lsh.hpp"
#include "fare/rng.hpp"

namespace fare {

namespace {

using Clock = std::chrono::steady_clock;

double time_once(const std::function<void()>& fn) {
  const auto t0 = Clock::now();
  fn();
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  return samples[samples.size() / 2];
}

}  // namespace

std::vector<BenchRow> run_bench(const std::vector<std::size_t>& sizes, std::size_t repetitions,
                                std::uint64_t seed) {
  if (!std::is_sorted(sizes.begin(), sizes.end())) {
    throw std::invalid_argument("run_bench: sizes must be ascending");
  }
  if (repetitions < 1) throw std::invalid_argument("run_bench: repetitions must be >= 1");

  const std::size_t d_z = 3;
  const std::size_t d_k = 16;
  std::vector<BenchRow> rows;

  for (std::size_t b : sizes) {
    Rng rng(Rng::mix(seed, b));
    // A positive similarity-like matrix; the mechanisms only see U and Z.
    Matrix u = rng.uniform_matrix(b, b, 0.2, 3.0);
    Matrix z = rng.uniform_matrix(b, d_z, 0.05, 1.0);
    const AttentionParams params = AttentionParams::init(d_z, d_k, 4.0, rng.next_u64());

    LshConfig lsh;
    lsh.rounds = 8;
    lsh.n_buckets = 8;
    lsh.chunk_size = std::max<std::size_t>(1, b / lsh.n_buckets);
    lsh.adjacency = ChunkAdjacency::kAdjacent;
    lsh.seed = seed;

    KernelSpec kernel;
    kernel.kind = KernelKind::kRbf;
    kernel.bandwidth = 0.5;

    volatile double sink = 0.0;  // keep the measured work observable

    std::vector<double> t_fare, t_sparse, t_cclk;
    for (std::size_t rep = 0; rep < repetitions; ++rep) {
      t_fare.push_back(time_once([&] {
        const Matrix p = attention_scores(z, params);
        sink = attention_output(u, p)[0];
      }));
      t_sparse.push_back(time_once([&] {
        const RowSupports supports = build_supports(z, lsh);
        const Matrix p = sparse_attention_scores(z, params, supports);
        sink = sparse_attention_output(u, p)[0];
      }));
      t_cclk.push_back(time_once([&] {
        const Matrix k_z = kernel_matrix(z, kernel);
        sink = cclk_score(u, k_z, 1e-3)[0];
      }));
    }
    (void)sink;

    rows.push_back({"fare", b, median(std::move(t_fare))});
    rows.push_back({"sparsefare", b, median(std::move(t_sparse))});
    rows.push_back({"cclk", b, median(std::move(t_cclk))});
  }
  return rows;
}

void write_bench_csv(const std::vector<BenchRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_bench_csv: cannot open " + path);
  out << "mechanism,batch_size,median_seconds\n";
  char buf[128];
  for (const BenchRow& row : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%zu,%.9f\n", row.mechanism.c_str(), row.batch_size,
                  row.median_seconds);
    out << buf;
  }
}

bool cclk_fare_ratio_increasing(const std::vector<BenchRow>& rows) {
  std::map<std::size_t, double> fare_time, cclk_time;
  for (const BenchRow& row : rows) {
    if (row.mechanism == "fare") fare_time[row.batch_size] = row.median_seconds;
    if (row.mechanism == "cclk") cclk_time[row.batch_size] = row.median_seconds;
  }
  if (fare_time.size() < 2) return false;
  double prev = 0.0;
  bool first = true;
  for (const auto& [b, t] : fare_time) {
    if (!cclk_time.count(b) || t <= 0.0) return false;
    const double ratio = cclk_time[b] / t;
    if (!first && ratio <= prev) return false;
    prev = ratio;
    first = false;
  }
  return true;
}

}  // namespace fare
