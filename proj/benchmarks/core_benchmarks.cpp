// Copyright 2026 The dlem Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include <optional>
#include <random>
#include <vector>

#include "dlem/encoder.hpp"
#include "dlem/graph.hpp"
#include "dlem/loss.hpp"
#include "dlem/mixup.hpp"
#include "dlem/spectral.hpp"

namespace {

using namespace dlem;

Matrix normal_matrix(Index rows, Index cols, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

void BM_Jacobi(benchmark::State& state) {
  const Index n = state.range(0);
  const Matrix a = normal_matrix(n, n, 1);
  const Matrix sym = a + a.transpose();
  for (auto _ : state) benchmark::DoNotOptimize(jacobi_eigensolver(sym));
  state.SetComplexityN(n);
}
BENCHMARK(BM_Jacobi)->RangeMultiplier(2)->Range(16, 256)->Unit(benchmark::kMillisecond)->Complexity();

void BM_KernelEigenmaps(benchmark::State& state) {
  const Matrix pts = normal_matrix(state.range(0), 2, 2);
  const WeightedGraph g = build_kernel_graph(pts, median_knn_distance(pts));
  for (auto _ : state) benchmark::DoNotOptimize(generalized_eigenmaps(g, 2));
}
BENCHMARK(BM_KernelEigenmaps)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

const std::vector<int> kDims = {32, 256, 256, 64};

void BM_EncoderForward(benchmark::State& state) {
  const MlpEncoder enc = init_encoder(kDims, 0);
  const Matrix x = normal_matrix(state.range(0), kDims.front(), 3);
  for (auto _ : state) benchmark::DoNotOptimize(forward(enc, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EncoderForward)->Arg(64)->Arg(256);

void BM_EncoderBackward(benchmark::State& state) {
  const MlpEncoder enc = init_encoder(kDims, 0);
  const Matrix x = normal_matrix(state.range(0), kDims.front(), 3);
  ForwardTape tape;
  forward(enc, x, &tape);
  const Matrix up = normal_matrix(state.range(0), kDims.back(), 4);
  for (auto _ : state) benchmark::DoNotOptimize(backward(enc, tape, up));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EncoderBackward)->Arg(64)->Arg(256);

void BM_DecorrelationLoss(benchmark::State& state) {
  const Matrix z = normal_matrix(64, state.range(0), 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(decorrelation_loss(z));
    benchmark::DoNotOptimize(decorrelation_loss_gradient(z));
  }
}
BENCHMARK(BM_DecorrelationLoss)->Arg(16)->Arg(64)->Arg(256);

void BM_StepGradients(benchmark::State& state) {
  const MlpEncoder enc = init_encoder(kDims, 0);
  const Matrix x = normal_matrix(64, kDims.front(), 6);
  const Matrix x_pos = x + 0.1 * normal_matrix(64, kDims.front(), 7);
  Rng rng(8);
  std::optional<MixPlan> plan;
  if (state.range(0) != 0) plan = sample_mix_plan(2.0, std::vector<int>{0, 1, 2}, 64, rng);
  for (auto _ : state) benchmark::DoNotOptimize(step_gradients(enc, x, x_pos, plan, 0.005));
}
BENCHMARK(BM_StepGradients)->Arg(0)->Arg(1)->ArgName("mixup");

}  // namespace

BENCHMARK_MAIN();
