// Serial reference vs OpenMP kernels on grid-sized inputs, plus one
// incremental surrogate update on the default grid.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "scope/grid_surrogate.hpp"
#include "scope/kernels.hpp"
#include "scope/space.hpp"

namespace {

using namespace scope;

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

constexpr std::size_t kDims = 5;

template <bool Parallel>
void BM_ball_filter(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto pts = random_vec(n * kDims, 1);
  const auto center = random_vec(kDims, 2);
  std::vector<std::uint8_t> excluded(n, 0), out(n);
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::ball_filter(pts, kDims, center, 0.5, excluded, out);
    else
      kernels::serial::ball_filter(pts, kDims, center, 0.5, excluded, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

template <bool Parallel>
void BM_se_kernel_row(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto pts = random_vec(n * kDims, 1);
  const auto x = random_vec(kDims, 2);
  std::vector<double> out(n);
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::se_kernel_row(pts, kDims, x, 2.0, out);
    else
      kernels::serial::se_kernel_row(pts, kDims, x, 2.0, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

template <bool Parallel>
void BM_whiten_append(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t rows = 32;
  const auto v = random_vec(rows * n, 1);
  const auto l = random_vec(rows, 2);
  const auto k = random_vec(n, 3);
  std::vector<double> out(n), sumsq(n, 0.0);
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::whiten_append(v, l, 1.5, k, out, sumsq);
    else
      kernels::serial::whiten_append(v, l, 1.5, k, out, sumsq);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * rows));
}

template <bool Parallel>
void BM_project(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t rows = 32;
  const auto v = random_vec(rows * n, 1);
  const auto w = random_vec(rows, 2);
  std::vector<double> out(n);
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::project(v, w, out);
    else
      kernels::serial::project(v, w, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * rows));
}

void BM_surrogate_observe(benchmark::State& state) {
  const ConfigSpace space(default_params());
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(5);
  for (auto _ : state) {
    GridSurrogate s(ModelKind::gaussian_process, space, {});
    for (std::size_t i = 0; i < n; ++i) s.observe(rng() % space.size(), 100.0 + static_cast<double>(i % 7));
    std::vector<double> means(space.size());
    s.means(means);
    benchmark::DoNotOptimize(means.data());
  }
}

BENCHMARK(BM_ball_filter<false>)->Arg(1920)->Arg(1 << 14);
BENCHMARK(BM_ball_filter<true>)->Arg(1920)->Arg(1 << 14);
BENCHMARK(BM_se_kernel_row<false>)->Arg(1920)->Arg(1 << 14);
BENCHMARK(BM_se_kernel_row<true>)->Arg(1920)->Arg(1 << 14);
BENCHMARK(BM_whiten_append<false>)->Arg(1920)->Arg(1 << 14);
BENCHMARK(BM_whiten_append<true>)->Arg(1920)->Arg(1 << 14);
BENCHMARK(BM_project<false>)->Arg(1920)->Arg(1 << 14);
BENCHMARK(BM_project<true>)->Arg(1920)->Arg(1 << 14);
BENCHMARK(BM_surrogate_observe)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
