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

#ifndef DLEM_DATA_HPP_
#define DLEM_DATA_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "dlem/types.hpp"

namespace dlem {

/// Feature matrix without labels. This is the only dataset view the
/// training path accepts, so labels cannot leak into training.
class UnlabeledFeatures {
 public:
  explicit UnlabeledFeatures(Matrix features);
  const Matrix& features() const noexcept { return features_; }
  Index size() const noexcept { return features_.rows(); }
  Index dim() const noexcept { return features_.cols(); }

 private:
  Matrix features_;
};

/// N x d samples, optionally labelled (labels are used for evaluation only).
struct Dataset {
  Matrix features;
  std::optional<std::vector<int>> labels;
  int class_count = 0;

  /// Checks finiteness, label range and that every class is nonempty.
  void validate() const;

  Index size() const noexcept { return features.rows(); }
  Index dim() const noexcept { return features.cols(); }
  bool labeled() const noexcept { return labels.has_value(); }
  UnlabeledFeatures unlabeled() const { return UnlabeledFeatures(features); }
  const std::vector<int>& label_vector() const;
};

/// Vector-space augmentations applied in this order: global scale drawn from
/// [scale_lo, scale_hi], additive N(0, noise_sigma^2) per coordinate, then
/// independent zero-masking of each coordinate with probability mask_prob.
struct AugmentationPolicy {
  double noise_sigma = 0.0;
  double scale_lo = 1.0;
  double scale_hi = 1.0;
  double mask_prob = 0.0;

  void validate() const;
};

/// noise_sigma = 0.1 x RMS of per-dimension standard deviations,
/// scale in [0.8, 1.2], mask_prob = 0.1.
AugmentationPolicy default_policy(const Matrix& features);

Vector augment(const Vector& x, const AugmentationPolicy& policy, Rng& rng);

/// `classes` isotropic unit-variance Gaussians centred at separation * e_c.
/// Requires classes <= dim. Rows are grouped by class.
Dataset generate_blobs(int classes, int per_class, int dim, double separation,
                       std::uint64_t seed);

/// Two interleaving half circles of radius 1: (cos t, sin t) and
/// (1 - cos t, 0.5 - sin t), t evenly spaced on [0, pi], plus Gaussian noise.
Dataset generate_moons(int per_class, double noise, std::uint64_t seed);

/// Concentric circles of radius 1 + 2c, evenly spaced angles, plus noise.
Dataset generate_rings(int classes, int per_class, double noise, std::uint64_t seed);

/// Two independent augmentations of the same source rows.
struct PairedBatch {
  Matrix x;
  Matrix x_pos;
  std::vector<Index> source_ids;
};

/// Epochs of paired batches: each epoch shuffles the sources and cuts them
/// into floor(N / B) batches, dropping the short remainder.
class PairedBatchStream {
 public:
  PairedBatchStream(UnlabeledFeatures data, AugmentationPolicy policy, Index batch_size,
                    std::uint64_t seed);

  Index batches_per_epoch() const noexcept { return data_.size() / batch_size_; }
  Index batch_size() const noexcept { return batch_size_; }
  std::vector<PairedBatch> next_epoch();

 private:
  UnlabeledFeatures data_;
  AugmentationPolicy policy_;
  Index batch_size_;
  Rng rng_;
};

/// CSV with one sample per line; when `has_label_column` the first cell is
/// an integer class id. Class count is the largest label plus one.
Dataset read_dataset_csv(std::istream& in, bool has_label_column);
Dataset load_csv(const std::filesystem::path& path, bool has_label_column);

/// Writes labels (when present) then features with 17 significant digits.
void write_dataset_csv(const Dataset& ds, std::ostream& out);
void save_csv(const Dataset& ds, const std::filesystem::path& path);

}  // namespace dlem

#endif  // DLEM_DATA_HPP_
