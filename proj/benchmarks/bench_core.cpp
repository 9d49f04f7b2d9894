// Microbenchmarks for the numeric hot paths: network forward/backward,
// AUROC, and Monte Carlo Shapley attribution.

#include <benchmark/benchmark.h>

#include <Eigen/Core>
#include <vector>

#include "touchpred/attribution.hpp"
#include "touchpred/metrics.hpp"
#include "touchpred/mlp.hpp"
#include "touchpred/rng.hpp"

using namespace touchpred;

namespace {

Eigen::MatrixXd count_matrix(int rows, int cols, std::uint64_t seed) {
  rng::Engine eng(seed);
  Eigen::MatrixXd X(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) X(i, j) = static_cast<double>(eng.below(12));
  }
  return X;
}

void BM_ForwardBatch(benchmark::State& state) {
  const Architecture arch;
  const NetworkParams params = init_params(arch, 1);
  const Eigen::MatrixXd X = count_matrix(static_cast<int>(state.range(0)), arch.input_dim, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward_batch(params, X));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBatch)->Arg(256)->Arg(2048)->Arg(16446);

void BM_LossAndGrad(benchmark::State& state) {
  const Architecture arch;
  const NetworkParams params = init_params(arch, 1);
  const int n = static_cast<int>(state.range(0));
  const Eigen::MatrixXd X = count_matrix(n, arch.input_dim, 2);
  rng::Engine eng(3);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = static_cast<double>(eng.below(2));
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_and_grad(params, X, y));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_LossAndGrad)->Arg(256)->Arg(2048)->Arg(16446);

void BM_Auroc(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  rng::Engine eng(4);
  std::vector<double> scores(static_cast<std::size_t>(n));
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    scores[static_cast<std::size_t>(i)] = eng.uniform();
    labels[static_cast<std::size_t>(i)] = static_cast<int>(eng.below(2));
  }
  labels.front() = 0;
  labels.back() = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(auroc(scores, labels));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Auroc)->Arg(2048)->Arg(65536);

void BM_ShapleyPermutation(benchmark::State& state) {
  const Architecture arch;
  const NetworkParams params = init_params(arch, 5);
  const BatchScoreFn f = [&params](const Eigen::MatrixXd& X) { return forward_batch(params, X); };
  const Eigen::MatrixXd background = count_matrix(128, arch.input_dim, 6);
  const Eigen::MatrixXd X = count_matrix(1, arch.input_dim, 7);
  const int n_perm = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(shapley_permutation(f, X.row(0).transpose(), background, n_perm, 8));
  }
}
BENCHMARK(BM_ShapleyPermutation)->Arg(50)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
