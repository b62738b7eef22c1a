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

#include "dlem/mixup.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dlem/error.hpp"

namespace dlem {
namespace {

void check_permutation(std::span<const Index> permutation, Index rows) {
  if (static_cast<Index>(permutation.size()) != rows) {
    throw InvalidArgument("permutation length " + std::to_string(permutation.size()) +
                          " does not match batch size " + std::to_string(rows));
  }
  std::vector<bool> hit(static_cast<std::size_t>(rows), false);
  for (Index p : permutation) {
    if (p < 0 || p >= rows || hit[static_cast<std::size_t>(p)]) {
      throw InvalidArgument("row mapping is not a permutation");
    }
    hit[static_cast<std::size_t>(p)] = true;
  }
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw InvalidArgument("mixing coefficient must lie in [0, 1]");
  }
}

}  // namespace

double sample_beta(double a, double b, Rng& rng) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw InvalidArgument("Beta shape parameters must be positive and finite");
  }
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  if (x + y == 0.0) return 0.5;  // both underflowed; only reachable for tiny shape parameters
  return x / (x + y);
}

MixPlan sample_mix_plan(double alpha, std::span<const int> eligible_layers, Index batch_size,
                        Rng& rng) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw InvalidArgument("mixup alpha must be positive and finite");
  }
  if (eligible_layers.empty()) throw InvalidArgument("mixup needs at least one eligible layer");
  for (int l : eligible_layers) {
    if (l < 0) throw InvalidArgument("eligible layers must be nonnegative");
  }
  if (batch_size < 2) throw InvalidArgument("mixup needs a batch of at least 2");

  MixPlan plan;
  plan.lambda = sample_beta(alpha, alpha, rng);
  std::uniform_int_distribution<std::size_t> pick(0, eligible_layers.size() - 1);
  plan.split.layer = eligible_layers[pick(rng)];
  plan.permutation.resize(static_cast<std::size_t>(batch_size));
  std::iota(plan.permutation.begin(), plan.permutation.end(), Index{0});
  std::shuffle(plan.permutation.begin(), plan.permutation.end(), rng);
  return plan;
}

Matrix mix_hidden(const Matrix& h_a, const Matrix& h_b, double lambda) {
  check_lambda(lambda);
  if (h_a.rows() != h_b.rows() || h_a.cols() != h_b.cols()) {
    throw InvalidArgument("mix_hidden: shape mismatch");
  }
  return lambda * h_a + (1.0 - lambda) * h_b;
}

Matrix permute_rows(const Matrix& m, std::span<const Index> permutation) {
  check_permutation(permutation, m.rows());
  Matrix out(m.rows(), m.cols());
  for (Index i = 0; i < m.rows(); ++i) out.row(i) = m.row(permutation[static_cast<std::size_t>(i)]);
  return out;
}

Matrix scatter_rows(const Matrix& m, std::span<const Index> permutation) {
  check_permutation(permutation, m.rows());
  Matrix out = Matrix::Zero(m.rows(), m.cols());
  for (Index i = 0; i < m.rows(); ++i) out.row(permutation[static_cast<std::size_t>(i)]) += m.row(i);
  return out;
}

namespace {

struct MixedForward {
  MixedTargets targets;
  ForwardTape anchor_tape;
  ForwardTape prefix_tape;  // g_L on x_pos
  ForwardTape suffix_tape;  // f_L on the mixed hidden batch
};

MixedForward run_mixed(const MlpEncoder& enc, const Matrix& x, const Matrix& x_pos,
                       const MixPlan& plan, bool record) {
  check_lambda(plan.lambda);
  if (x.rows() != x_pos.rows() || x.cols() != x_pos.cols()) {
    throw InvalidArgument("anchor and positive batches differ in shape");
  }
  check_permutation(plan.permutation, x.rows());
  MixedForward f;
  f.targets.z = forward(enc, x, record ? &f.anchor_tape : nullptr);
  // g_L(x_pos[perm]) equals g_L(x_pos)[perm]: batch statistics are
  // permutation invariant, so one prefix pass serves both operands.
  const Matrix hidden = forward_split(enc, x_pos, plan.split, record ? &f.prefix_tape : nullptr);
  const Matrix mixed = mix_hidden(hidden, permute_rows(hidden, plan.permutation), plan.lambda);
  f.targets.z_pos_mix = forward_from(enc, mixed, plan.split, record ? &f.suffix_tape : nullptr);
  f.targets.z_mix =
      mix_hidden(f.targets.z, permute_rows(f.targets.z, plan.permutation), plan.lambda);
  return f;
}

}  // namespace

MixedTargets mixed_step_targets(const MlpEncoder& enc, const Matrix& x, const Matrix& x_pos,
                                const MixPlan& plan) {
  return run_mixed(enc, x, x_pos, plan, false).targets;
}

StepResult step_gradients(const MlpEncoder& enc, const Matrix& x, const Matrix& x_pos,
                          const std::optional<MixPlan>& plan, double gamma, GammaMode mode) {
  StepResult out{LossBreakdown{}, EncoderGradients::zeros_like(enc)};
  if (!plan) {
    if (x.rows() != x_pos.rows() || x.cols() != x_pos.cols()) {
      throw InvalidArgument("anchor and positive batches differ in shape");
    }
    ForwardTape anchor_tape;
    ForwardTape positive_tape;
    const Matrix z = forward(enc, x, &anchor_tape);
    const Matrix z_pos = forward(enc, x_pos, &positive_tape);
    out.loss = total_loss(z, z_pos, z, gamma, mode);
    const LossGradients g = total_loss_gradient(z, z_pos, z, gamma, mode);
    backward(enc, anchor_tape, g.trace + g.anchor, out.grads);
    backward(enc, positive_tape, g.target, out.grads);
    return out;
  }

  const MixedForward f = run_mixed(enc, x, x_pos, *plan, true);
  const MixedTargets& t = f.targets;
  out.loss = total_loss(t.z_mix, t.z_pos_mix, t.z, gamma, mode);
  const LossGradients g = total_loss_gradient(t.z_mix, t.z_pos_mix, t.z, gamma, mode);
  const double lambda = plan->lambda;

  const Matrix dz =
      g.anchor + lambda * g.trace + (1.0 - lambda) * scatter_rows(g.trace, plan->permutation);
  backward(enc, f.anchor_tape, dz, out.grads);

  const Matrix d_mixed = backward(enc, f.suffix_tape, g.target, out.grads);
  const Matrix d_hidden =
      lambda * d_mixed + (1.0 - lambda) * scatter_rows(d_mixed, plan->permutation);
  backward(enc, f.prefix_tape, d_hidden, out.grads);
  return out;
}

}  // namespace dlem
