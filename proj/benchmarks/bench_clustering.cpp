#include <gpcca/clustering.hpp>

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace gpcca;

Matrix blobs(Index n, Index d, int clusters, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix centers(d, clusters);
  for (Index j = 0; j < clusters; ++j) {
    for (Index i = 0; i < d; ++i) centers(i, j) = 6.0 * normal(rng);
  }
  Matrix x(d, n);
  for (Index k = 0; k < n; ++k) {
    for (Index i = 0; i < d; ++i) x(i, k) = centers(i, k % clusters) + normal(rng);
  }
  return x;
}

void BM_KnnGraph(benchmark::State& state) {
  const Matrix x = blobs(state.range(0), 10, 6, 3);
  for (auto _ : state) benchmark::DoNotOptimize(knn_graph(x, 20));
}
BENCHMARK(BM_KnnGraph)->Arg(600)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_Louvain(benchmark::State& state) {
  const NeighborGraph g = knn_graph(blobs(state.range(0), 10, 6, 3), 20);
  LouvainOptions opts;
  for (auto _ : state) benchmark::DoNotOptimize(louvain(g, opts));
}
BENCHMARK(BM_Louvain)->Arg(600)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace
