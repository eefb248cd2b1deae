// Laplacian kernel throughput: serial vs OpenMP vs dense matrix product.
#include "conlab/graph.hpp"
#include "conlab/kernels.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace conlab;

namespace {

// Graph computes a dense spectrum on construction, so large instances are
// assembled directly as neighbor lists: a ring plus `chords` random extra
// edges per vertex.
NeighborLists ring_with_chords(std::size_t n, std::size_t chords) {
  std::mt19937_64 rng(n);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    adj[i].push_back((i + 1) % n);
    adj[(i + 1) % n].push_back(i);
    for (std::size_t c = 0; c < chords; ++c) {
      const std::size_t j = pick(rng);
      if (j == i) continue;
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
  }
  NeighborLists lists;
  lists.offsets.push_back(0);
  for (const auto& row : adj) {
    lists.targets.insert(lists.targets.end(), row.begin(), row.end());
    lists.weights.insert(lists.weights.end(), row.size(), 1.0);
    lists.offsets.push_back(lists.targets.size());
  }
  return lists;
}

struct Setup {
  NeighborLists g;
  StateMatrix x;
  StateMatrix out;

  Setup(std::size_t n, Eigen::Index cols)
      : g(ring_with_chords(n, 2)), x(StateMatrix::Random(static_cast<Eigen::Index>(n), cols)),
        out(static_cast<Eigen::Index>(n), cols) {}
};

void BM_serial(benchmark::State& state) {
  Setup s(static_cast<std::size_t>(state.range(0)), state.range(1));
  for (auto _ : state) {
    kernels::laplacian_apply_serial(s.g, s.x, s.out);
    benchmark::DoNotOptimize(s.out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}

void BM_openmp(benchmark::State& state) {
  Setup s(static_cast<std::size_t>(state.range(0)), state.range(1));
  for (auto _ : state) {
    kernels::laplacian_apply_omp(s.g, s.x, s.out);
    benchmark::DoNotOptimize(s.out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}

void BM_dense(benchmark::State& state) {
  Setup s(static_cast<std::size_t>(state.range(0)), state.range(1));
  const auto n = static_cast<Eigen::Index>(s.g.size());
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < s.g.size(); ++i) {
    for (const std::size_t j : s.g.neighbors(i)) {
      lap(i, j) -= 1.0;
      lap(i, i) += 1.0;
    }
  }
  for (auto _ : state) {
    s.out.noalias() = lap * s.x;
    benchmark::DoNotOptimize(s.out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}

void sizes(benchmark::internal::Benchmark* b) {
  for (long n : {64, 1024, 8192, 65536}) {
    for (long cols : {1, 8}) b->Args({n, cols});
  }
}

void dense_sizes(benchmark::internal::Benchmark* b) {
  for (long n : {64, 1024, 4096}) {
    for (long cols : {1, 8}) b->Args({n, cols});
  }
}

}  // namespace

BENCHMARK(BM_serial)->Apply(sizes);
BENCHMARK(BM_openmp)->Apply(sizes);
BENCHMARK(BM_dense)->Apply(dense_sizes);

BENCHMARK_MAIN();
