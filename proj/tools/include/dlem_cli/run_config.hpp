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

#ifndef DLEM_CLI_RUN_CONFIG_HPP_
#define DLEM_CLI_RUN_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "dlem/data.hpp"
#include "dlem/encoder.hpp"
#include "dlem/trainer.hpp"

namespace dlem::cli {

using Json = nlohmann::ordered_json;

// Training data: a CSV file when `path` is set, otherwise a generator.
struct DataSpec {
  std::string path;
  bool has_labels = true;
  std::string generator = "blobs";  // blobs | moons | rings
  int classes = 3;
  int per_class = 100;
  int dim = 8;
  double separation = 4.0;  // blobs
  double noise = 0.05;      // moons, rings
};

struct EncoderSpec {
  std::vector<int> hidden = {256, 256};
  int output_dim = 64;
  bool hidden_standardize = true;
  bool hidden_rectify = true;
  bool final_standardize = true;

  std::vector<int> dims(int input_dim) const;
  EncoderOptions options() const;
};

struct TrainRun {
  std::uint64_t seed = 0;
  DataSpec data;
  EncoderSpec encoder;
  TrainConfig train;
  bool custom_augmentation = false;  // otherwise default_policy(features)
};

// Seed streams of a run. Training batches and mixup use streams 1 and 2
// inside dlem::train.
inline constexpr std::uint64_t kEncoderInitStream = 0;
inline constexpr std::uint64_t kDataStream = 3;

/// Every accepted key with its default, flat and dotted.
Json default_train_config();

/// Nested objects are flattened into dotted keys: {"mixup": {"alpha": 1}}
/// becomes {"mixup.alpha": 1}.
Json flatten(const Json& config);

/// Overlays `config` on the defaults. Unknown keys, wrong types and
/// out-of-range values throw ConfigError naming the key.
TrainRun parse_train_config(const Json& config);

/// Fully materialized flat config. After resolve_augmentation() the policy
/// values are concrete, so feeding this back reproduces the run.
Json resolved_config(const TrainRun& run);

/// Fixes the augmentation policy from the training features when the
/// default policy is selected.
void resolve_augmentation(TrainRun& run, const Matrix& features);

/// Generated data uses derive_seed(seed, kDataStream).
Dataset generate_dataset(const DataSpec& spec, std::uint64_t seed);
Dataset load_training_data(const DataSpec& spec, std::uint64_t seed);

}  // namespace dlem::cli

#endif  // DLEM_CLI_RUN_CONFIG_HPP_
