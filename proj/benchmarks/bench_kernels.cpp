#include <benchmark/benchmark.h>

#include "melmix/matrix.hpp"
#include "melmix/nn.hpp"
#include "melmix/rng.hpp"

namespace {

melmix::Matrix filled(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  melmix::Matrix m(rows, cols);
  const melmix::RngStream rng{seed, 0xbe};
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(i, -1, 1);
  return m;
}

void BM_MatmulChannel(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const melmix::Matrix a = filled(rows, 288, 1);
  const melmix::Matrix b = filled(288, 768, 2);
  melmix::Matrix out(rows, 768);
  for (auto _ : state) {
    melmix::matmul_into(a, b, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * rows * 288 * 768 * 2);
}
BENCHMARK(BM_MatmulChannel)->Arg(200)->Arg(1600)->Arg(4800);

void BM_MatmulToken(benchmark::State& state) {
  const melmix::Matrix a = filled(288, 200, 3);
  const melmix::Matrix b = filled(200, 200, 4);
  melmix::Matrix out(288, 200);
  for (auto _ : state) {
    melmix::matmul_into(a, b, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * 288 * 200 * 200 * 2);
}
BENCHMARK(BM_MatmulToken);

void BM_Gelu(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const melmix::Matrix x = filled(n, 768, 5);
  melmix::Matrix y(n, 768);
  for (auto _ : state) {
    melmix::gelu_into(x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * x.size());
}
BENCHMARK(BM_Gelu)->Arg(200)->Arg(4800);

void BM_LayerNorm(benchmark::State& state) {
  const melmix::Matrix x = filled(4800, 288, 6);
  const melmix::Matrix gamma = melmix::Matrix::filled(1, 288, 1.0f);
  const melmix::Matrix beta(1, 288);
  melmix::Matrix y(4800, 288);
  for (auto _ : state) {
    melmix::layernorm_into(x, gamma, beta, 1e-5f, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * x.size());
}
BENCHMARK(BM_LayerNorm);

}  // namespace

BENCHMARK_MAIN();
