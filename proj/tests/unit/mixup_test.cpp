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

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <vector>

#include "dlem/error.hpp"
#include "test_support.hpp"

namespace dlem {
namespace {

using testing::normal_matrix;

std::vector<Index> identity_perm(Index b) {
  std::vector<Index> p(static_cast<std::size_t>(b));
  std::iota(p.begin(), p.end(), Index{0});
  return p;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

TEST(SampleBetaTest, UniformWhenAlphaIsOne) {
  Rng rng(1);
  const std::vector<int> eligible = {0};
  double sum = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const double l = sample_mix_plan(1.0, eligible, 2, rng).lambda;
    ASSERT_GE(l, 0.0);
    ASSERT_LE(l, 1.0);
    sum += l;
  }
  EXPECT_NEAR(sum / draws, 0.5, 0.01);
}

TEST(SampleBetaTest, VarianceMatchesMomentFormula) {
  Rng rng(2);
  const int draws = 100000;
  std::vector<double> v(draws);
  for (double& x : v) x = sample_beta(2.0, 2.0, rng);
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / draws;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  EXPECT_NEAR(ss / (draws - 1), 1.0 / 20.0, 0.005);
  EXPECT_THROW(sample_beta(0.0, 1.0, rng), InvalidArgument);
}

TEST(MixPlanTest, PlanIsValidAndDeterministic) {
  const std::vector<int> eligible = {0, 1, 2};
  Rng a(9);
  Rng b(9);
  std::vector<int> seen(3, 0);
  for (int i = 0; i < 300; ++i) {
    const MixPlan p = sample_mix_plan(2.0, eligible, 12, a);
    const MixPlan q = sample_mix_plan(2.0, eligible, 12, b);
    EXPECT_EQ(p.lambda, q.lambda);
    EXPECT_EQ(p.split.layer, q.split.layer);
    EXPECT_EQ(p.permutation, q.permutation);
    std::vector<Index> sorted = p.permutation;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, identity_perm(12));
    ++seen[static_cast<std::size_t>(p.split.layer)];
  }
  for (int count : seen) EXPECT_GT(count, 60);
}

TEST(MixPlanTest, RejectsBadArguments) {
  Rng rng(3);
  const std::vector<int> eligible = {0};
  EXPECT_THROW(sample_mix_plan(0.0, eligible, 4, rng), InvalidArgument);
  EXPECT_THROW(sample_mix_plan(-1.0, eligible, 4, rng), InvalidArgument);
  EXPECT_THROW(sample_mix_plan(1.0, std::vector<int>{}, 4, rng), InvalidArgument);
  EXPECT_THROW(sample_mix_plan(1.0, eligible, 1, rng), InvalidArgument);
}

TEST(MixHiddenTest, Examples) {
  Rng rng(4);
  const Matrix a = normal_matrix(3, 4, rng);
  const Matrix b = normal_matrix(3, 4, rng);
  EXPECT_EQ(mix_hidden(a, b, 1.0), a);
  EXPECT_EQ(mix_hidden(a, b, 0.0), b);
  EXPECT_EQ(mix_hidden(Matrix::Zero(2, 3), Matrix::Constant(2, 3, 2.0), 0.5), Matrix::Ones(2, 3));
  EXPECT_THROW(mix_hidden(a, b, 1.5), InvalidArgument);
  EXPECT_THROW(mix_hidden(a, b, -0.1), InvalidArgument);
  EXPECT_THROW(mix_hidden(a, b.leftCols(2), 0.5), InvalidArgument);
}

TEST(PermuteRowsTest, ScatterIsTheAdjoint) {
  Rng rng(5);
  const Matrix m = normal_matrix(5, 3, rng);
  const Matrix y = normal_matrix(5, 3, rng);
  const std::vector<Index> perm = {3, 0, 4, 1, 2};
  const Matrix pm = permute_rows(m, perm);
  for (Index i = 0; i < 5; ++i) EXPECT_EQ(pm.row(i), m.row(perm[static_cast<std::size_t>(i)]));
  // <P m, y> = <m, P^T y>
  EXPECT_NEAR(pm.cwiseProduct(y).sum(), m.cwiseProduct(scatter_rows(y, perm)).sum(), 1e-12);
  EXPECT_THROW(permute_rows(m, std::vector<Index>{0, 1}), InvalidArgument);
  EXPECT_THROW(permute_rows(m, std::vector<Index>{0, 1, 2, 3, 5}), InvalidArgument);
  EXPECT_THROW(permute_rows(m, std::vector<Index>{0, 0, 2, 3, 4}), InvalidArgument);
}

class MixedTargetsTest : public ::testing::Test {
 protected:
  void SetUp() override {
    Rng rng(6);
    x = normal_matrix(8, 5, rng);
    x_pos = x + normal_matrix(8, 5, rng, 0.2);
  }
  MlpEncoder enc = init_encoder(std::vector<int>{5, 10, 10, 4}, 17);
  Matrix x;
  Matrix x_pos;
  std::vector<Index> perm = {2, 0, 1, 5, 7, 3, 4, 6};
};

TEST_F(MixedTargetsTest, LambdaOneIsUnmixed) {
  for (int l = 0; l < 3; ++l) {
    const MixedTargets t = mixed_step_targets(enc, x, x_pos, MixPlan{1.0, SplitPoint{l}, perm});
    EXPECT_LT(max_abs(t.z_pos_mix - forward(enc, x_pos)), 1e-6);
    EXPECT_EQ(t.z_mix, t.z);
    EXPECT_EQ(t.z, forward(enc, x));
  }
}

TEST_F(MixedTargetsTest, IdentityPermutationIsSelfMix) {
  for (int l = 0; l < 3; ++l) {
    const MixedTargets t =
        mixed_step_targets(enc, x, x_pos, MixPlan{0.37, SplitPoint{l}, identity_perm(8)});
    EXPECT_LT(max_abs(t.z_pos_mix - forward(enc, x_pos)), 1e-6);
  }
}

TEST_F(MixedTargetsTest, LambdaZeroIsPermutedPipeline) {
  for (int l = 0; l < 3; ++l) {
    const MixedTargets t = mixed_step_targets(enc, x, x_pos, MixPlan{0.0, SplitPoint{l}, perm});
    EXPECT_LT(max_abs(t.z_pos_mix - permute_rows(forward(enc, x_pos), perm)), 1e-6);
    EXPECT_EQ(t.z_mix, permute_rows(t.z, perm));
  }
}

TEST_F(MixedTargetsTest, MixIsExactConvexCombination) {
  const double lambda = 0.3;
  const MixedTargets t = mixed_step_targets(enc, x, x_pos, MixPlan{lambda, SplitPoint{1}, perm});
  EXPECT_EQ(max_abs(t.z_mix - (lambda * t.z + (1.0 - lambda) * permute_rows(t.z, perm))), 0.0);
}

TEST_F(MixedTargetsTest, StepLossMatchesTargets) {
  const MixPlan plan{0.6, SplitPoint{2}, perm};
  const MixedTargets t = mixed_step_targets(enc, x, x_pos, plan);
  const StepResult r = step_gradients(enc, x, x_pos, plan, 0.01);
  const LossBreakdown expected = total_loss(t.z_mix, t.z_pos_mix, t.z, 0.01);
  EXPECT_NEAR(r.loss.total, expected.total, 1e-12);

  const StepResult plain = step_gradients(enc, x, x_pos, std::nullopt, 0.01);
  EXPECT_NEAR(plain.loss.total, total_loss(forward(enc, x), forward(enc, x_pos), 0.01).total,
              1e-12);
  const StepResult one = step_gradients(enc, x, x_pos, MixPlan{1.0, SplitPoint{1}, perm}, 0.01);
  EXPECT_NEAR(one.loss.total, plain.loss.total, 1e-10);
}

// Loss of a mixed step as a function of the encoder parameters.
double step_loss(const MlpEncoder& enc, const Matrix& x, const Matrix& x_pos,
                 const std::optional<MixPlan>& plan, double gamma) {
  if (!plan) return total_loss(forward(enc, x), forward(enc, x_pos), gamma).total;
  const MixedTargets t = mixed_step_targets(enc, x, x_pos, *plan);
  return total_loss(t.z_mix, t.z_pos_mix, t.z, gamma).total;
}

TEST(StepGradientTest, MatchesFiniteDifferences) {
  Rng rng(7);
  int checked = 0;
  for (int trial = 0; trial < 8; ++trial) {
    const MlpEncoder enc = init_encoder(std::vector<int>{4, 6, 6, 3}, 50 + static_cast<std::uint64_t>(trial));
    const Index b = 4 + trial % 3;
    const Matrix x = normal_matrix(b, 4, rng);
    const Matrix x_pos = x + normal_matrix(b, 4, rng, 0.3);
    std::optional<MixPlan> plan;
    if (trial % 4 != 0) {
      plan = sample_mix_plan(2.0, std::vector<int>{0, 1, 2}, b, rng);
    }
    const double gamma = 0.05;
    const StepResult r = step_gradients(enc, x, x_pos, plan, gamma);
    for (int l = 0; l < enc.layer_count(); ++l) {
      auto f = [&](const Matrix& w) {
        MlpEncoder e = enc;
        e.mutable_layers()[static_cast<std::size_t>(l)].weights = w;
        return step_loss(e, x, x_pos, plan, gamma);
      };
      const Matrix fd = testing::extrapolated_gradient(f, enc.layer(l).weights);
      EXPECT_LE(testing::relative_error(r.grads.weights[static_cast<std::size_t>(l)], fd), 1e-5)
          << "trial " << trial << " layer " << l;
    }
    ++checked;
  }
  EXPECT_EQ(checked, 8);
}

}  // namespace
}  // namespace dlem
