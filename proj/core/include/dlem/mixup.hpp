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

#ifndef DLEM_MIXUP_HPP_
#define DLEM_MIXUP_HPP_

#include <optional>
#include <span>
#include <vector>

#include "dlem/encoder.hpp"
#include "dlem/loss.hpp"
#include "dlem/types.hpp"

namespace dlem {

/// One mixing decision per batch: coefficient, split layer and partner rows.
struct MixPlan {
  double lambda = 1.0;
  SplitPoint split;
  std::vector<Index> permutation;  // row i is mixed with row permutation[i]
};

/// Beta(a, b) draw via the ratio of two Gamma variates.
double sample_beta(double a, double b, Rng& rng);

/// lambda ~ Beta(alpha, alpha), split uniform over `eligible_layers`,
/// permutation uniform over batch rows.
MixPlan sample_mix_plan(double alpha, std::span<const int> eligible_layers, Index batch_size,
                        Rng& rng);

/// lambda * h_a + (1 - lambda) * h_b.
Matrix mix_hidden(const Matrix& h_a, const Matrix& h_b, double lambda);

/// out.row(i) = m.row(permutation[i]).
Matrix permute_rows(const Matrix& m, std::span<const Index> permutation);

/// Adjoint of permute_rows: out.row(permutation[i]) += m.row(i).
Matrix scatter_rows(const Matrix& m, std::span<const Index> permutation);

struct MixedTargets {
  Matrix z;          // f(x), anchors
  Matrix z_pos_mix;  // f_L(lambda g_L(x_pos) + (1 - lambda) g_L(x_pos[perm]))
  Matrix z_mix;      // lambda z + (1 - lambda) z[perm]
};

/// Forward half of a mixed training step. The trace pair is
/// (z_mix, z_pos_mix); decorrelation applies to z.
MixedTargets mixed_step_targets(const MlpEncoder& enc, const Matrix& x, const Matrix& x_pos,
                                const MixPlan& plan);

struct StepResult {
  LossBreakdown loss;
  EncoderGradients grads;
};

/// Loss and exact parameter gradients of one training step. Without a plan
/// the trace pair is (f(x), f(x_pos)); with one it is the mixed pair above.
StepResult step_gradients(const MlpEncoder& enc, const Matrix& x, const Matrix& x_pos,
                          const std::optional<MixPlan>& plan, double gamma,
                          GammaMode mode = GammaMode::kStrict);

}  // namespace dlem

#endif  // DLEM_MIXUP_HPP_
