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

#ifndef DLEM_FEWSHOT_HPP_
#define DLEM_FEWSHOT_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dlem/data.hpp"
#include "dlem/encoder.hpp"
#include "dlem/types.hpp"

namespace dlem {

struct Episode {
  int n_way = 0;
  int k_shot = 0;
  int q_query = 0;
  std::vector<int> classes;         // dataset class of episode label c
  Matrix support;                   // (n_way k_shot) x K, grouped by episode label
  std::vector<int> support_labels;  // in [0, n_way)
  Matrix query;                     // (n_way q_query) x K
  std::vector<int> query_labels;
  std::vector<Index> support_rows;  // source rows in the dataset
  std::vector<Index> query_rows;
};

/// Draws n_way classes without replacement, then k_shot + q_query distinct
/// rows per class. Labels are remapped to the order the classes were drawn.
Episode sample_episode(const Matrix& features, std::span<const int> labels, int class_count,
                       int n_way, int k_shot, int q_query, Rng& rng);
Episode sample_episode(const Dataset& ds, int n_way, int k_shot, int q_query, Rng& rng);

struct ProbeOptions {
  double reg_strength = 1.0;
  double tolerance = 1e-5;  // on the gradient infinity norm
  int max_iterations = 1000;
};

/// Multinomial logistic model: scores = x W^T + b.
struct ProbeModel {
  Matrix weights;  // classes x K
  Vector bias;
  double reg_strength = 1.0;
  int iterations = 0;
  double gradient_norm = 0.0;  // infinity norm at exit

  Matrix probabilities(const Matrix& x) const;
  std::vector<int> predict(const Matrix& x) const;
};

/// Mean cross-entropy plus reg_strength / 2 * ||W||^2 (bias unregularized).
double probe_objective(const ProbeModel& model, const Matrix& x, std::span<const int> labels);

/// Full-batch gradient descent with backtracking from W = 0, b = 0.
ProbeModel fit_probe(const Matrix& x, std::span<const int> labels, int class_count,
                     const ProbeOptions& options = {});

double accuracy(std::span<const int> predicted, std::span<const int> truth);

struct FewShotProtocol {
  int n_way = 5;
  int k_shot = 1;
  int q_query = 15;
  int episodes = 600;
  ProbeOptions probe;

  std::string name() const;  // e.g. "5-way-1-shot"
};

struct FewShotResult {
  double mean_accuracy = 0.0;
  double ci95 = 0.0;  // 1.96 * sample std / sqrt(E)
  std::vector<double> accuracies;  // per episode, in episode order
};

/// Runs the protocol on precomputed embeddings. Episode e draws from an rng
/// seeded with derive_seed(seed, e).
FewShotResult evaluate_fewshot(const Matrix& embeddings, std::span<const int> labels,
                               int class_count, const FewShotProtocol& protocol,
                               std::uint64_t seed);

/// Frozen-encoder representation: the first `blocks` layers applied to the
/// whole set in one batch, so standardization uses full-set statistics.
/// blocks == layer_count gives the final output.
Matrix embed(const MlpEncoder& enc, const Matrix& features, int blocks);

/// Default probe point: output of the penultimate block.
int default_probe_blocks(const MlpEncoder& enc);

FewShotResult evaluate_fewshot(const MlpEncoder& enc, const Dataset& ds,
                               const FewShotProtocol& protocol, std::uint64_t seed,
                               int probe_blocks);

struct LinearSchedule {
  int epochs = 100;
  double lr0 = 0.3;
  std::vector<int> milestones = {60, 80};  // lr *= decay when reaching these epochs
  double decay = 0.1;
  Index batch_size = 256;
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;

  double rate_at(int epoch) const;  // epoch is 0-based
};

/// Trains a multinomial linear classifier by minibatch SGD on the train
/// embeddings and returns its test accuracy. Class sets must match.
double linear_evaluation(const Matrix& train_x, std::span<const int> train_labels,
                         const Matrix& test_x, std::span<const int> test_labels,
                         int class_count, const LinearSchedule& schedule = {});

double linear_evaluation(const MlpEncoder& enc, const Dataset& train, const Dataset& test,
                         const LinearSchedule& schedule, int probe_blocks);

}  // namespace dlem

#endif  // DLEM_FEWSHOT_HPP_
