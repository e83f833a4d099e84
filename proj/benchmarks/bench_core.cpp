// Microbenchmarks for the kernels that dominate runtime: the weighted
// Manhattan distance, nearest-neighbor queries, the penalized regression
// path, and tree fitting. Run ./bench_core --benchmark_filter=<regex> to
// narrow.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "m2m/dgp.hpp"
#include "m2m/estimate.hpp"
#include "m2m/lasso.hpp"
#include "m2m/matching.hpp"
#include "m2m/matrix.hpp"
#include "m2m/metric.hpp"
#include "m2m/rng.hpp"
#include "m2m/trees.hpp"

namespace {

m2m::Matrix random_matrix(std::size_t n, std::size_t p, std::uint64_t seed) {
  m2m::Rng rng(seed);
  m2m::Matrix x(n, p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) x(i, j) = rng.normal();
  return x;
}

std::vector<double> sparse_weights(std::size_t p, std::size_t nnz,
                                   std::uint64_t seed) {
  m2m::Rng rng(seed);
  std::vector<double> w(p, 0.0);
  for (std::size_t j = 0; j < nnz && j < p; ++j) w[j] = 0.1 + rng.uniform();
  return w;
}

void BM_weighted_l1(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  const auto nnz = static_cast<std::size_t>(state.range(1));
  const m2m::Matrix x = random_matrix(2, p, 7);
  const auto w = sparse_weights(p, nnz, 8);
  std::vector<double> a(x.row(0).begin(), x.row(0).end());
  std::vector<double> b(x.row(1).begin(), x.row(1).end());
  for (auto _ : state)
    benchmark::DoNotOptimize(m2m::weighted_l1_distance(w, a, b));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_weighted_l1)->Args({64, 8})->Args({256, 16})->Args({1024, 16});

void BM_knn_query(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = static_cast<std::size_t>(state.range(1));
  const m2m::Matrix x = random_matrix(n, p, 11);
  const auto w = sparse_weights(p, p / 4 + 1, 12);
  std::vector<int> candidates(n);
  for (std::size_t i = 0; i < n; ++i) candidates[i] = static_cast<int>(i);
  for (auto _ : state)
    benchmark::DoNotOptimize(m2m::knn(x, candidates, 0, w, 10));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_knn_query)->Args({1024, 64})->Args({8192, 64})->Args({2048, 1024});

void BM_lasso_path(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = static_cast<std::size_t>(state.range(1));
  const m2m::DgpSample s = m2m::gen_quadratic(n, p, 8, 2, 31);
  m2m::LassoConfig cfg;
  for (auto _ : state) {
    const auto path = m2m::lambda_path(s.dataset.x, s.dataset.y, 100, 1e-3);
    benchmark::DoNotOptimize(
        m2m::fit_lasso_path(s.dataset.x, s.dataset.y, path, cfg));
  }
}
BENCHMARK(BM_lasso_path)->Args({512, 32})->Args({2048, 64})
    ->Unit(benchmark::kMillisecond);

void BM_tree_fit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const m2m::DgpSample s = m2m::gen_basic_quadratic(n, 10, 41);
  m2m::TreeConfig cfg;
  for (auto _ : state)
    benchmark::DoNotOptimize(m2m::fit_tree(s.dataset.x, s.dataset.y, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_tree_fit)->Arg(512)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_crossfit_lcm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = static_cast<std::size_t>(state.range(1));
  const m2m::DgpSample s = m2m::gen_quadratic(n, p, 8, 2, 51);
  m2m::RunConfig cfg;
  cfg.method = m2m::Method::lcm;
  cfg.k = 10;
  cfg.eta = 2;
  cfg.seed = 5;
  for (auto _ : state)
    benchmark::DoNotOptimize(m2m::crossfit_run(s.dataset, cfg));
}
BENCHMARK(BM_crossfit_lcm)->Args({1024, 32})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
