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

#include "dlem/loss.hpp"

#include <cmath>
#include <string>

#include "dlem/error.hpp"

namespace dlem {
namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument(std::string(what) + ": shape mismatch (" + std::to_string(a.rows()) +
                          "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                          "x" + std::to_string(b.cols()) + ")");
  }
  if (a.size() == 0) throw InvalidArgument(std::string(what) + ": empty input");
}

void require_batch(const Matrix& z, const char* what) {
  if (z.rows() < 2) throw InvalidArgument(std::string(what) + " needs a batch of at least 2");
  if (z.cols() < 1) throw InvalidArgument(std::string(what) + ": empty embedding");
}

void require_gamma(double gamma, GammaMode mode) {
  if (!std::isfinite(gamma) || gamma < 0.0) {
    throw InvalidArgument("gamma must be finite and nonnegative");
  }
  if (gamma == 0.0 && mode != GammaMode::kAblation) {
    throw InvalidArgument("gamma must be positive (0 is only allowed in ablation mode)");
  }
}

double trace_scale(const Matrix& z, TraceReduction reduction) {
  return reduction == TraceReduction::kElementMean ? 1.0 / static_cast<double>(z.size())
                                                   : 1.0 / static_cast<double>(z.rows());
}

}  // namespace

double trace_loss(const Matrix& z, const Matrix& z_pos, TraceReduction reduction) {
  require_same_shape(z, z_pos, "trace_loss");
  return (z - z_pos).squaredNorm() * trace_scale(z, reduction);
}

Matrix trace_loss_gradient(const Matrix& z, const Matrix& z_pos, TraceReduction reduction) {
  require_same_shape(z, z_pos, "trace_loss_gradient");
  return (2.0 * trace_scale(z, reduction)) * (z - z_pos);
}

Matrix batch_correlation(const Matrix& z) {
  return (z.transpose() * z) / static_cast<double>(z.rows());
}

double decorrelation_loss(const Matrix& z) {
  require_batch(z, "decorrelation_loss");
  const Matrix c = batch_correlation(z);
  return c.squaredNorm() - c.diagonal().squaredNorm();
}

Matrix decorrelation_loss_gradient(const Matrix& z) {
  require_batch(z, "decorrelation_loss_gradient");
  Matrix off = batch_correlation(z);
  off.diagonal().setZero();
  return (4.0 / static_cast<double>(z.rows())) * (z * off);
}

LossBreakdown total_loss(const Matrix& z_trace, const Matrix& z_target, const Matrix& z_anchor,
                         double gamma, GammaMode mode) {
  require_gamma(gamma, mode);
  LossBreakdown out;
  out.trace_term = trace_loss(z_trace, z_target);
  out.decorrelation_term = decorrelation_loss(z_anchor);
  out.gamma = gamma;
  out.total = out.trace_term + gamma * out.decorrelation_term;
  return out;
}

LossBreakdown total_loss(const Matrix& z, const Matrix& z_pos, double gamma, GammaMode mode) {
  return total_loss(z, z_pos, z, gamma, mode);
}

LossGradients total_loss_gradient(const Matrix& z_trace, const Matrix& z_target,
                                  const Matrix& z_anchor, double gamma, GammaMode mode) {
  require_gamma(gamma, mode);
  LossGradients out;
  out.trace = trace_loss_gradient(z_trace, z_target);
  out.target = -out.trace;
  out.anchor = gamma * decorrelation_loss_gradient(z_anchor);
  return out;
}

double frobenius_identity_gap(const Matrix& z) {
  require_batch(z, "frobenius_identity_gap");
  const auto b = static_cast<double>(z.rows());
  const double covariance_side = batch_correlation(z).squaredNorm();
  const Matrix gram = z * z.transpose();
  const double pairwise_side = gram.cwiseAbs2().sum() / (b * b);
  return std::abs(covariance_side - pairwise_side);
}

Vector negative_sample_weights(const Matrix& z, Index i) {
  if (i < 0 || i >= z.rows()) throw InvalidArgument("row index out of range");
  return (z * z.row(i).transpose()) / static_cast<double>(z.rows());
}

Vector analytic_anchor_gradient(const Matrix& z, const Matrix& z_pos, double gamma, Index i) {
  require_same_shape(z, z_pos, "analytic_anchor_gradient");
  if (i < 0 || i >= z.rows()) {
    throw InvalidArgument("anchor index " + std::to_string(i) + " out of range");
  }
  const auto b = static_cast<double>(z.rows());
  const Vector weights = negative_sample_weights(z, i);
  const Vector pushed = z.transpose() * weights;
  const Vector zi = z.row(i).transpose();
  const Vector zp = z_pos.row(i).transpose();
  return (2.0 / b) * ((1.0 - gamma) * zi - zp + gamma * pushed);
}

}  // namespace dlem
