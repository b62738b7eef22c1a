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

#ifndef DLEM_LOSS_HPP_
#define DLEM_LOSS_HPP_

#include "dlem/types.hpp"

namespace dlem {

/// How the positive-pair distance is averaged.
enum class TraceReduction {
  kElementMean,  // mean over all B*K entries of (z - z_pos)^2; the training loss
  kPairMean,     // mean over the B pairs of |z_i - z_pos_i|^2 (K times larger)
};

/// gamma == 0 is only accepted in ablation mode (trace term alone).
enum class GammaMode { kStrict, kAblation };

struct LossBreakdown {
  double trace_term = 0.0;
  double decorrelation_term = 0.0;
  double gamma = 0.0;
  double total = 0.0;
};

double trace_loss(const Matrix& z, const Matrix& z_pos,
                  TraceReduction reduction = TraceReduction::kElementMean);

/// d trace_loss / d z. The gradient with respect to z_pos is its negation.
Matrix trace_loss_gradient(const Matrix& z, const Matrix& z_pos,
                           TraceReduction reduction = TraceReduction::kElementMean);

/// Batch correlation c = z^T z / B (uncentered).
Matrix batch_correlation(const Matrix& z);

/// sum_{k != l} c_kl^2 with c = z^T z / B. Requires B >= 2.
double decorrelation_loss(const Matrix& z);

/// d decorrelation_loss / d z = (4 / B) z offdiag(c).
Matrix decorrelation_loss_gradient(const Matrix& z);

/// trace_loss(z_trace, z_target) + gamma * decorrelation_loss(z_anchor).
/// With manifold mixup the trace pair is (z_mix, z_pos_mix) while the
/// decorrelation term stays on the unmixed anchors.
LossBreakdown total_loss(const Matrix& z_trace, const Matrix& z_target, const Matrix& z_anchor,
                         double gamma, GammaMode mode = GammaMode::kStrict);

/// Unmixed form: the anchors are also the first element of the trace pair.
LossBreakdown total_loss(const Matrix& z, const Matrix& z_pos, double gamma,
                         GammaMode mode = GammaMode::kStrict);

struct LossGradients {
  Matrix trace;   // d L / d z_trace
  Matrix target;  // d L / d z_target
  Matrix anchor;  // d L / d z_anchor
};

/// Gradients of the three-argument total_loss.
LossGradients total_loss_gradient(const Matrix& z_trace, const Matrix& z_target,
                                  const Matrix& z_anchor, double gamma,
                                  GammaMode mode = GammaMode::kStrict);

/// |‖z^T z / B‖_F^2 - (1/B^2) sum_ij (z_i . z_j)^2|: the gap between the
/// covariance Frobenius norm and its pairwise inner-product expansion.
double frobenius_identity_gap(const Matrix& z);

/// Closed-form anchor gradient used in the collapse analysis:
/// (2/B) ((1 - gamma) z_i - z_i+ + gamma sum_j (z_i . z_j / B) z_j).
/// Diagnostic only; it is not the gradient the trainer uses.
Vector analytic_anchor_gradient(const Matrix& z, const Matrix& z_pos, double gamma, Index i);

/// Weights z_i . z_j / B that the closed form places on every batch sample.
Vector negative_sample_weights(const Matrix& z, Index i);

}  // namespace dlem

#endif  // DLEM_LOSS_HPP_
