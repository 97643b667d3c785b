#include <benchmark/benchmark.h>

#include <random>

#include "bcnn/block_circulant.hpp"
#include "bcnn/dense.hpp"
#include "bcnn/fft.hpp"

namespace {

std::vector<double> uniform(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

// args: n, k
void BM_CirculantMatvec(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  std::mt19937_64 rng(1);
  const auto w = bcnn::BlockCirculantMatrix::random(bcnn::partition(n, n, k), rng);
  const auto xs = uniform(n, rng);
  for (auto _ : state) {
    auto x = bcnn::BlockVector::from_logical(xs, k, w.scheme().q);
    benchmark::DoNotOptimize(bcnn::matvec(w, x));
  }
  state.SetItemsProcessed(state.iterations());
}

void BM_DenseMatvec(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  std::mt19937_64 rng(1);
  const auto w = bcnn::BlockCirculantMatrix::random(bcnn::partition(n, n, k), rng);
  const auto dense = bcnn::expand_dense(w);
  const auto x = uniform(n, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bcnn::dense_matvec(dense, x));
  }
  state.SetItemsProcessed(state.iterations());
}

void BM_NaiveCirculantMatvec(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  std::mt19937_64 rng(1);
  const auto w = bcnn::BlockCirculantMatrix::random(bcnn::partition(n, n, k), rng);
  const auto x = bcnn::BlockVector::from_logical(uniform(n, rng), k, w.scheme().q);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bcnn::matvec_naive(w, x));
  }
}

void BM_Rfft(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  const auto v = uniform(k, rng);
  std::vector<bcnn::Complex> bins(bcnn::half_spectrum_size(k));
  for (auto _ : state) {
    bcnn::rfft_into(v, bins);
    benchmark::DoNotOptimize(bins.data());
  }
}

void matvec_args(benchmark::internal::Benchmark* b) {
  for (const long n : {1024, 4096}) {
    for (const long k : {16, 64, 256}) b->Args({n, k});
  }
}

}  // namespace

BENCHMARK(BM_CirculantMatvec)->Apply(matvec_args)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_NaiveCirculantMatvec)->Apply(matvec_args)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_DenseMatvec)->Args({1024, 1})->Args({4096, 1})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Rfft)->RangeMultiplier(4)->Range(16, 4096);
BENCHMARK_MAIN();
