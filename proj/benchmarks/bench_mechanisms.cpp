#include <benchmark/benchmark.h>

#include "fare/attention.hpp"
#include "fare/kernels.hpp"
#include "fare/losses.hpp"
#include "fare/lsh.hpp"
#include "fare/rng.hpp"

namespace {

struct Fixture {
  fare::Matrix u;
  fare::Matrix z;
  fare::AttentionParams params;
  fare::LshConfig lsh;

  explicit Fixture(std::size_t b) {
    fare::Rng rng(b);
    u = rng.uniform_matrix(b, b, 0.2, 3.0);
    z = rng.uniform_matrix(b, 3, 0.05, 1.0);
    params = fare::AttentionParams::init(3, 16, 4.0, 7);
    lsh.rounds = 8;
    lsh.n_buckets = 8;
    lsh.chunk_size = std::max<std::size_t>(1, b / 8);
    lsh.adjacency = fare::ChunkAdjacency::kAdjacent;
    lsh.seed = 11;
  }
};

void BM_DenseAttention(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    const fare::Matrix p = fare::attention_scores(f.z, f.params);
    benchmark::DoNotOptimize(fare::attention_output(f.u, p));
  }
}

void BM_SparseAttention(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    const fare::RowSupports supports = fare::build_supports(f.z, f.lsh);
    const fare::Matrix p = fare::sparse_attention_scores(f.z, f.params, supports);
    benchmark::DoNotOptimize(fare::sparse_attention_output(f.u, p));
  }
}

void BM_KernelSolveScore(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  fare::KernelSpec spec{fare::KernelKind::kRbf, 0.5};
  for (auto _ : state) {
    const fare::Matrix k_z = fare::kernel_matrix(f.z, spec);
    benchmark::DoNotOptimize(fare::cclk_score(f.u, k_z, 1e-3));
  }
}

void BM_BuildSupports(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(fare::build_supports(f.z, f.lsh));
  }
}

}  // namespace

BENCHMARK(BM_DenseAttention)->Arg(128)->Arg(256)->Arg(512)->Arg(1024);
BENCHMARK(BM_SparseAttention)->Arg(128)->Arg(256)->Arg(512)->Arg(1024);
BENCHMARK(BM_KernelSolveScore)->Arg(128)->Arg(256)->Arg(512);
BENCHMARK(BM_BuildSupports)->Arg(128)->Arg(256)->Arg(512)->Arg(1024);

BENCHMARK_MAIN();
