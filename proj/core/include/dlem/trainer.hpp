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

#ifndef DLEM_TRAINER_HPP_
#define DLEM_TRAINER_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "dlem/data.hpp"
#include "dlem/encoder.hpp"
#include "dlem/types.hpp"

namespace dlem {

struct MixupSettings {
  bool enabled = true;
  double alpha = 2.0;
  std::vector<int> eligible_layers = {0, 1, 2};
};

struct TrainConfig {
  int epochs = 200;
  Index batch_size = 64;
  double lr0 = 0.05;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double gamma = 0.005;
  bool ablation = false;  // admits gamma == 0 (trace term only)
  MixupSettings mixup;
  std::uint64_t seed = 0;
  /// Augmentation used to build positive pairs; nullopt means
  /// default_policy() of the training features.
  std::optional<AugmentationPolicy> augmentation;

  /// Throws ConfigError naming the first offending key. When an encoder is
  /// given, eligible mixup layers are also checked against its depth.
  void validate(const MlpEncoder* enc = nullptr) const;
};

struct CollapseMetrics {
  double effective_rank = 0.0;  // singular values above 1% of the largest
  double min_dim_std = 0.0;
  double mean_dim_std = 0.0;
};

/// Collapse diagnostics of an N x K embedding (N >= 2). Standard deviations
/// are population (divide by N) per column.
CollapseMetrics collapse_metrics(const Matrix& z);

struct EpochRecord {
  int epoch = 0;                    // 1-based
  double trace_term = 0.0;          // mean over the epoch's steps
  double decorrelation_term = 0.0;  // mean over the epoch's steps
  double total = 0.0;
  double learning_rate = 0.0;       // rate used by the epoch's last step
  CollapseMetrics embedding;        // on the un-augmented training set
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t steps = 0;

  void write_csv(std::ostream& out) const;
};

/// lr0 * (1 + cos(pi t / T)) / 2 for 0 <= t <= T.
double cosine_lr(double lr0, std::size_t step, std::size_t total_steps);

/// v <- momentum v + (grad + weight_decay param); param <- param - lr v.
void sgd_step(Eigen::Ref<Matrix> param, const Eigen::Ref<const Matrix>& grad,
              Eigen::Ref<Matrix> velocity, double lr, double momentum, double weight_decay);

/// Momentum SGD over an encoder. Weight decay applies to affine weights only.
class SgdMomentum {
 public:
  explicit SgdMomentum(const MlpEncoder& enc);
  void step(MlpEncoder& enc, const EncoderGradients& grads, double lr, double momentum,
            double weight_decay);

 private:
  EncoderGradients velocity_;
};

/// Trains `enc` in place. Each step draws a paired batch, optionally a mix
/// plan, evaluates the loss with exact gradients and applies momentum SGD on
/// a per-step cosine schedule. Deterministic in (data, config).
/// Throws DivergenceError on a non-finite loss.
TrainReport train(MlpEncoder& enc, const UnlabeledFeatures& data, const TrainConfig& cfg);

}  // namespace dlem

#endif  // DLEM_TRAINER_HPP_
