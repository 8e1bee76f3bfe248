// Copyright 2026 The lnlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <vector>

#include "lnlab/classifier.hpp"
#include "lnlab/numerics.hpp"
#include "lnlab/risk.hpp"
#include "lnlab/rng.hpp"

namespace {

using lnlab::Matrix;

Matrix random_matrix(int rows, int cols, lnlab::RngStream& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform();
  return m;
}

std::vector<int> random_labels(int n, int classes, lnlab::RngStream& rng) {
  std::vector<int> labels(n);
  for (int& y : labels) y = static_cast<int>(rng.below(classes));
  return labels;
}

// One SGD batch of the MNIST network: forward, Eq-2 weights, backward.
void BM_MnistBatchStep(benchmark::State& state) {
  lnlab::RngStream rng(1, 0);
  const int batch = static_cast<int>(state.range(0));
  const std::vector<int> widths{784, 256, 10};
  const lnlab::MlpParams params = lnlab::MlpParams::init(widths, rng);
  const Matrix x = random_matrix(batch, 784, rng);
  const std::vector<int> y = random_labels(batch, 10, rng);
  const lnlab::LossHead head = lnlab::LossHead::cross_entropy();
  for (auto _ : state) {
    const lnlab::BatchEvaluation eval = lnlab::evaluate_batch(params, x, y, head);
    const lnlab::GradientWeights w = lnlab::eq2_weights_batch_mean(eval.losses, 0.1);
    benchmark::DoNotOptimize(lnlab::weighted_backward(params, eval, w.weights));
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_MnistBatchStep)->Arg(32)->Arg(128);

void BM_ForwardBatch(benchmark::State& state) {
  lnlab::RngStream rng(2, 0);
  const std::vector<int> widths{2, 128, 128, 3};
  const lnlab::MlpParams params = lnlab::MlpParams::init(widths, rng);
  const Matrix x = random_matrix(static_cast<int>(state.range(0)), 2, rng);
  for (auto _ : state) benchmark::DoNotOptimize(lnlab::forward_batch(params, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBatch)->Arg(128)->Arg(3000);

void BM_Eq2Weights(benchmark::State& state) {
  lnlab::RngStream rng(3, 0);
  std::vector<double> losses(state.range(0));
  for (double& l : losses) l = 3.0 * rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(lnlab::eq2_weights_batch_mean(losses, 0.1));
}
BENCHMARK(BM_Eq2Weights)->Arg(128);

void BM_LogDet(benchmark::State& state) {
  lnlab::RngStream rng(4, 0);
  const int c = static_cast<int>(state.range(0));
  Matrix m = random_matrix(c, c, rng);
  m.diagonal().array() += c;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lnlab::log_det(m));
    benchmark::DoNotOptimize(lnlab::log_det_gradient(m));
  }
}
BENCHMARK(BM_LogDet)->Arg(3)->Arg(10)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
