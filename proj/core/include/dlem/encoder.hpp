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

#ifndef DLEM_ENCODER_HPP_
#define DLEM_ENCODER_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "dlem/types.hpp"

namespace dlem {

/// Variance floor inside the square root of every standardization layer.
inline constexpr double kStandardizeEpsilon = 1e-5;

/// One block of the encoder: y = act(standardize(x W + b)).
///
/// Standardization uses the statistics of the batch being evaluated (biased
/// variance) and has no learnable scale or shift.
struct AffineLayer {
  Matrix weights;  // fan_in x fan_out
  Vector bias;     // fan_out
  bool standardize = false;
  bool rectify = false;

  Index fan_in() const noexcept { return weights.rows(); }
  Index fan_out() const noexcept { return weights.cols(); }
};

/// Multilayer perceptron f_theta. Layer L of a split point is the number of
/// leading blocks that form g_L; the remaining blocks form f_L.
class MlpEncoder {
 public:
  explicit MlpEncoder(std::vector<AffineLayer> layers);

  MlpEncoder(const MlpEncoder& other);
  MlpEncoder& operator=(const MlpEncoder& other);
  MlpEncoder(MlpEncoder&&) noexcept = default;
  MlpEncoder& operator=(MlpEncoder&&) noexcept = default;

  int layer_count() const noexcept { return static_cast<int>(layers_.size()); }
  Index input_dim() const noexcept { return layers_.front().fan_in(); }
  Index output_dim() const noexcept { return layers_.back().fan_out(); }
  /// Width of the representation after `layers` blocks (0 = input).
  Index width_after(int layers) const;
  bool uses_standardization() const noexcept;

  const std::vector<AffineLayer>& layers() const noexcept { return layers_; }
  const AffineLayer& layer(int i) const { return layers_.at(static_cast<std::size_t>(i)); }

  /// Mutable access for optimizers. Every call invalidates outstanding
  /// forward tapes.
  std::span<AffineLayer> mutable_layers();

  std::uint64_t identity() const noexcept { return identity_; }
  std::uint64_t generation() const noexcept { return generation_; }

 private:
  std::vector<AffineLayer> layers_;
  std::uint64_t identity_;
  std::uint64_t generation_ = 0;
};

struct EncoderOptions {
  bool hidden_standardize = true;
  bool hidden_rectify = true;
  bool final_standardize = true;
};

/// Builds an encoder for dims [d_in, h_1, ..., K] with Glorot-uniform
/// weights and zero biases, deterministic in `seed`.
MlpEncoder init_encoder(std::span<const int> layer_dims, std::uint64_t seed,
                        const EncoderOptions& options = {});

/// Index of the hidden layer where f_theta splits into g_L and f_L.
/// Valid values are 0 .. layer_count - 1 (0 means "mix the input").
struct SplitPoint {
  int layer = 0;
};

struct EncoderGradients;

/// Activations recorded by a forward pass over blocks [first, last), needed
/// by backward(). Bound to one encoder state.
class ForwardTape {
 public:
  struct Block {
    Matrix input;      // B x fan_in
    Matrix activated;  // value fed to the rectifier (standardized if enabled)
    Vector inv_std;    // per output column, empty when not standardized
  };

  bool recorded() const noexcept { return recorded_; }
  int first_layer() const noexcept { return first_; }
  int last_layer() const noexcept { return last_; }
  Index batch_size() const noexcept { return batch_; }
  const std::vector<Block>& blocks() const noexcept { return blocks_; }

 private:
  friend Matrix forward_layers(const MlpEncoder&, const Matrix&, int, int, ForwardTape*);
  friend Matrix backward(const MlpEncoder&, const ForwardTape&, const Matrix&,
                         EncoderGradients&);

  bool recorded_ = false;
  std::uint64_t identity_ = 0;
  std::uint64_t generation_ = 0;
  int first_ = 0;
  int last_ = 0;
  Index batch_ = 0;
  Index output_width_ = 0;
  std::vector<Block> blocks_;
};

/// Runs blocks [first, last) on `input`; records a tape when one is given.
Matrix forward_layers(const MlpEncoder& enc, const Matrix& input, int first, int last,
                      ForwardTape* tape = nullptr);

/// z = f_theta(x).
Matrix forward(const MlpEncoder& enc, const Matrix& batch, ForwardTape* tape = nullptr);

/// g_L(x): the hidden representation after `split.layer` blocks.
Matrix forward_split(const MlpEncoder& enc, const Matrix& batch, SplitPoint split,
                     ForwardTape* tape = nullptr);

/// f_L(h): the remaining blocks applied to a hidden representation.
Matrix forward_from(const MlpEncoder& enc, const Matrix& hidden, SplitPoint split,
                    ForwardTape* tape = nullptr);

/// Parameter gradients laid out like the encoder's layers.
struct EncoderGradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static EncoderGradients zeros_like(const MlpEncoder& enc);
  EncoderGradients& operator+=(const EncoderGradients& other);
};

/// Reverse-mode pass through the blocks recorded in `tape`, including the
/// batch-statistics terms of standardization. Adds parameter gradients into
/// `grads` and returns the gradient with respect to the tape's input.
/// Throws InvalidArgument if the tape was recorded for a different encoder or
/// before the encoder's parameters changed.
Matrix backward(const MlpEncoder& enc, const ForwardTape& tape, const Matrix& upstream,
                EncoderGradients& grads);

struct BackwardResult {
  EncoderGradients params;
  Matrix input;
};

BackwardResult backward(const MlpEncoder& enc, const ForwardTape& tape,
                        const Matrix& upstream);

}  // namespace dlem

#endif  // DLEM_ENCODER_HPP_
