#include <numeric>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "pplab/energy.hpp"
#include "pplab/kernels.hpp"
#include "pplab/operator.hpp"

namespace {

using namespace pplab;

struct Setup {
  Layout layout;
  Region region;
  Stencil stencil;
  std::vector<double> in;
  std::vector<double> out;
};

// args: dimension, half order, extent
Setup make_setup(const benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int m = static_cast<int>(state.range(1));
  const int extent = static_cast<int>(state.range(2));
  const auto op = EllipticOperator::polyharmonic(m, n);
  const Grid grid(n, 1.0 / extent, extent);
  Setup s;
  s.stencil = energy_kernel(op.expanded_terms(), n, grid.spacing());
  s.layout = Layout(grid, s.stencil.radius);
  s.region = Region::box(grid);
  s.in.assign(s.layout.size(), 0.0);
  s.out.assign(s.layout.size(), 0.0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t i = 0; i < grid.size(); ++i) s.in[s.layout.index_of_node(i)] = u(rng);
  return s;
}

void BM_ApplySerial(benchmark::State& state) {
  auto s = make_setup(state);
  for (auto _ : state) {
    kernels::serial::apply(s.layout, s.region, s.stencil, s.in.data(), s.out.data());
    benchmark::DoNotOptimize(s.out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.layout.grid().size()));
}

void BM_ApplyOmp(benchmark::State& state) {
  auto s = make_setup(state);
  for (auto _ : state) {
    kernels::omp::apply(s.layout, s.region, s.stencil, s.in.data(), s.out.data());
    benchmark::DoNotOptimize(s.out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.layout.grid().size()));
}

void BM_DotSerial(benchmark::State& state) {
  std::vector<double> a(static_cast<std::size_t>(state.range(0))), b(a.size());
  std::iota(a.begin(), a.end(), 0.0);
  std::iota(b.begin(), b.end(), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::dot(a, b));
  state.SetBytesProcessed(state.iterations() * state.range(0) * 16);
}

void BM_DotOmp(benchmark::State& state) {
  std::vector<double> a(static_cast<std::size_t>(state.range(0))), b(a.size());
  std::iota(a.begin(), a.end(), 0.0);
  std::iota(b.begin(), b.end(), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::omp::dot(a, b));
  state.SetBytesProcessed(state.iterations() * state.range(0) * 16);
}

}  // namespace

BENCHMARK(BM_ApplySerial)->Args({3, 1, 32})->Args({3, 2, 24})->Args({5, 2, 6})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ApplyOmp)->Args({3, 1, 32})->Args({3, 2, 24})->Args({5, 2, 6})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DotSerial)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_DotOmp)->Arg(1 << 16)->Arg(1 << 20);

BENCHMARK_MAIN();
