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

#include "dlem/encoder.hpp"

#include <atomic>
#include <cmath>
#include <string>

#include "dlem/error.hpp"

namespace dlem {
namespace {

std::uint64_t next_identity() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

void validate_layers(const std::vector<AffineLayer>& layers) {
  if (layers.empty()) throw InvalidArgument("encoder needs at least one layer");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const AffineLayer& l = layers[i];
    if (l.fan_in() < 1 || l.fan_out() < 1) {
      throw InvalidArgument("layer " + std::to_string(i) + " has an empty weight matrix");
    }
    if (l.bias.size() != l.fan_out()) {
      throw InvalidArgument("layer " + std::to_string(i) + " bias length mismatch");
    }
    if (i > 0 && layers[i - 1].fan_out() != l.fan_in()) {
      throw InvalidArgument("layer " + std::to_string(i) + " input width " +
                            std::to_string(l.fan_in()) + " does not match previous output " +
                            std::to_string(layers[i - 1].fan_out()));
    }
  }
}

}  // namespace

MlpEncoder::MlpEncoder(std::vector<AffineLayer> layers)
    : layers_(std::move(layers)), identity_(next_identity()) {
  validate_layers(layers_);
}

MlpEncoder::MlpEncoder(const MlpEncoder& other)
    : layers_(other.layers_), identity_(next_identity()), generation_(other.generation_) {}

MlpEncoder& MlpEncoder::operator=(const MlpEncoder& other) {
  if (this != &other) {
    layers_ = other.layers_;
    identity_ = next_identity();
    generation_ = other.generation_;
  }
  return *this;
}

Index MlpEncoder::width_after(int layers) const {
  if (layers < 0 || layers > layer_count()) {
    throw InvalidArgument("layer index " + std::to_string(layers) + " outside 0.." +
                          std::to_string(layer_count()));
  }
  return layers == 0 ? input_dim() : layers_[static_cast<std::size_t>(layers - 1)].fan_out();
}

bool MlpEncoder::uses_standardization() const noexcept {
  for (const AffineLayer& l : layers_) {
    if (l.standardize) return true;
  }
  return false;
}

std::span<AffineLayer> MlpEncoder::mutable_layers() {
  ++generation_;
  return layers_;
}

MlpEncoder init_encoder(std::span<const int> layer_dims, std::uint64_t seed,
                        const EncoderOptions& options) {
  if (layer_dims.size() < 2) throw InvalidArgument("encoder needs at least 2 layer dims");
  for (int d : layer_dims) {
    if (d < 1) throw InvalidArgument("encoder layer dims must be positive");
  }
  Rng rng(seed);
  std::vector<AffineLayer> layers;
  const std::size_t count = layer_dims.size() - 1;
  for (std::size_t i = 0; i < count; ++i) {
    const int fan_in = layer_dims[i];
    const int fan_out = layer_dims[i + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> uniform(-limit, limit);
    AffineLayer layer;
    layer.weights.resize(fan_in, fan_out);
    for (int r = 0; r < fan_in; ++r) {
      for (int c = 0; c < fan_out; ++c) layer.weights(r, c) = uniform(rng);
    }
    layer.bias = Vector::Zero(fan_out);
    const bool last = i + 1 == count;
    layer.standardize = last ? options.final_standardize : options.hidden_standardize;
    layer.rectify = last ? false : options.hidden_rectify;
    layers.push_back(std::move(layer));
  }
  return MlpEncoder(std::move(layers));
}

Matrix forward_layers(const MlpEncoder& enc, const Matrix& input, int first, int last,
                      ForwardTape* tape) {
  if (first < 0 || last > enc.layer_count() || first > last) {
    throw InvalidArgument("invalid layer range [" + std::to_string(first) + ", " +
                          std::to_string(last) + ")");
  }
  if (input.cols() != enc.width_after(first)) {
    throw InvalidArgument("input width " + std::to_string(input.cols()) + " does not match " +
                          std::to_string(enc.width_after(first)) + " expected at layer " +
                          std::to_string(first));
  }
  const Index batch = input.rows();
  if (batch < 1) throw InvalidArgument("empty batch");
  if (tape != nullptr) {
    tape->blocks_.clear();
    tape->recorded_ = false;
  }

  Matrix x = input;
  for (int li = first; li < last; ++li) {
    const AffineLayer& layer = enc.layer(li);
    if (layer.standardize && batch < 2) {
      throw InvalidArgument("standardization needs a batch of at least 2 rows");
    }
    Matrix h = x * layer.weights;
    h.rowwise() += layer.bias.transpose();
    Vector inv_std;
    if (layer.standardize) {
      const Eigen::RowVectorXd mean = h.colwise().mean();
      h.rowwise() -= mean;
      const Eigen::RowVectorXd var = h.cwiseAbs2().colwise().mean();
      inv_std = (var.array() + kStandardizeEpsilon).rsqrt().transpose();
      h = h * inv_std.asDiagonal();
    }
    Matrix out = layer.rectify ? Matrix(h.cwiseMax(0.0)) : h;
    if (tape != nullptr) {
      tape->blocks_.push_back({std::move(x), std::move(h), std::move(inv_std)});
    }
    x = std::move(out);
  }
  if (tape != nullptr) {
    tape->recorded_ = true;
    tape->identity_ = enc.identity();
    tape->generation_ = enc.generation();
    tape->first_ = first;
    tape->last_ = last;
    tape->batch_ = batch;
    tape->output_width_ = x.cols();
  }
  return x;
}

Matrix forward(const MlpEncoder& enc, const Matrix& batch, ForwardTape* tape) {
  return forward_layers(enc, batch, 0, enc.layer_count(), tape);
}

namespace {
void check_split(const MlpEncoder& enc, SplitPoint split) {
  if (split.layer < 0 || split.layer >= enc.layer_count()) {
    throw InvalidArgument("split layer " + std::to_string(split.layer) + " outside 0.." +
                          std::to_string(enc.layer_count() - 1));
  }
}
}  // namespace

Matrix forward_split(const MlpEncoder& enc, const Matrix& batch, SplitPoint split,
                     ForwardTape* tape) {
  check_split(enc, split);
  return forward_layers(enc, batch, 0, split.layer, tape);
}

Matrix forward_from(const MlpEncoder& enc, const Matrix& hidden, SplitPoint split,
                    ForwardTape* tape) {
  check_split(enc, split);
  return forward_layers(enc, hidden, split.layer, enc.layer_count(), tape);
}

EncoderGradients EncoderGradients::zeros_like(const MlpEncoder& enc) {
  EncoderGradients g;
  for (const AffineLayer& l : enc.layers()) {
    g.weights.push_back(Matrix::Zero(l.fan_in(), l.fan_out()));
    g.biases.push_back(Vector::Zero(l.fan_out()));
  }
  return g;
}

EncoderGradients& EncoderGradients::operator+=(const EncoderGradients& other) {
  if (other.weights.size() != weights.size()) {
    throw InvalidArgument("gradient layouts differ");
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] += other.weights[i];
    biases[i] += other.biases[i];
  }
  return *this;
}

Matrix backward(const MlpEncoder& enc, const ForwardTape& tape, const Matrix& upstream,
                EncoderGradients& grads) {
  if (!tape.recorded_) throw InvalidArgument("backward called without a recorded forward pass");
  if (tape.identity_ != enc.identity() || tape.generation_ != enc.generation()) {
    throw InvalidArgument("stale forward tape: encoder parameters changed since the forward pass");
  }
  if (upstream.rows() != tape.batch_ || upstream.cols() != tape.output_width_) {
    throw InvalidArgument("upstream gradient shape does not match the forward output");
  }
  if (grads.weights.size() != static_cast<std::size_t>(enc.layer_count())) {
    throw InvalidArgument("gradient accumulator does not match the encoder");
  }
  Matrix g = upstream;
  const auto batch = static_cast<double>(tape.batch_);
  for (int li = tape.last_ - 1; li >= tape.first_; --li) {
    const AffineLayer& layer = enc.layer(li);
    const ForwardTape::Block& block = tape.blocks_[static_cast<std::size_t>(li - tape.first_)];
    if (layer.rectify) g = g.cwiseProduct((block.activated.array() > 0.0).cast<double>().matrix());
    if (layer.standardize) {
      // d pre = inv_std * (g - mean(g) - xhat * mean(g * xhat)), column-wise.
      const Eigen::RowVectorXd mean_g = g.colwise().sum() / batch;
      const Eigen::RowVectorXd mean_gx =
          g.cwiseProduct(block.activated).colwise().sum() / batch;
      Matrix centered = g;
      centered.rowwise() -= mean_g;
      centered -= block.activated * mean_gx.asDiagonal();
      g = centered * block.inv_std.asDiagonal();
    }
    const auto slot = static_cast<std::size_t>(li);
    grads.weights[slot].noalias() += block.input.transpose() * g;
    grads.biases[slot] += g.colwise().sum().transpose();
    g = (g * layer.weights.transpose()).eval();
  }
  return g;
}

BackwardResult backward(const MlpEncoder& enc, const ForwardTape& tape,
                        const Matrix& upstream) {
  BackwardResult out{EncoderGradients::zeros_like(enc), Matrix()};
  out.input = backward(enc, tape, upstream, out.params);
  return out;
}

}  // namespace dlem
