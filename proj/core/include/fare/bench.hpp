#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fare {

struct BenchRow {
  std::string mechanism;  // fare | sparsefare | cclk
  std::size_t batch_size;
  double median_seconds;
};

// Median wall time of each conditioning mechanism (dense attention,
// LSH-sparsified attention, kernel-solve scoring) on synthetic batches of
// the given sizes. Sizes must be ascending.
std::vector<BenchRow> run_bench(const std::vector<std::size_t>& sizes, std::size_t repetitions,
                                std::uint64_t seed = 0);

// CSV with header mechanism,batch_size,median_seconds.
void write_bench_csv(const std::vector<BenchRow>& rows, const std::string& path);

// True when the cclk/fare time ratio strictly increases across the measured
// sizes (the cubic-vs-quadratic cost trend).
bool cclk_fare_ratio_increasing(const std::vector<BenchRow>& rows);

}  // namespace fare
