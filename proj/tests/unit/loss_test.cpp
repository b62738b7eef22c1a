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

#include <gtest/gtest.h>

#include <numeric>
#include <vector>

#include "dlem/error.hpp"
#include "test_support.hpp"

namespace dlem {
namespace {

using testing::normal_matrix;
using testing::numeric_gradient;
using testing::relative_error;

// Columns centred and scaled to unit population variance, as the final
// standardization layer leaves them.
Matrix standardized(Matrix z) {
  z.rowwise() -= z.colwise().mean();
  const Eigen::RowVectorXd sd = z.cwiseAbs2().colwise().mean().cwiseSqrt();
  return z.array().rowwise() / sd.array();
}

TEST(TraceLossTest, Examples) {
  Rng rng(1);
  const Matrix z = normal_matrix(4, 3, rng);
  EXPECT_EQ(trace_loss(z, z), 0.0);

  Matrix a(1, 2);
  a << 0.0, 0.0;
  Matrix b(1, 2);
  b << 2.0, 0.0;
  EXPECT_DOUBLE_EQ(trace_loss(a, b), 2.0);
  EXPECT_DOUBLE_EQ(trace_loss(a, b, TraceReduction::kPairMean), 4.0);

  const Matrix w = normal_matrix(4, 3, rng);
  EXPECT_EQ(trace_loss(z, w), trace_loss(w, z));
  EXPECT_GE(trace_loss(z, w), 0.0);
  EXPECT_THROW(trace_loss(z, normal_matrix(4, 2, rng)), InvalidArgument);
}

TEST(DecorrelationLossTest, Examples) {
  Matrix orth(4, 2);
  orth << 1, 1, 1, -1, -1, 1, -1, -1;
  EXPECT_EQ(decorrelation_loss(orth), 0.0);

  const int k = 5;
  Vector col(4);
  col << 1.0, -1.0, 1.0, -1.0;
  const Matrix same = col.replicate(1, k);
  EXPECT_DOUBLE_EQ(decorrelation_loss(same), k * (k - 1));

  Rng rng(2);
  const Matrix z = normal_matrix(6, 4, rng);
  Matrix shuffled = z;
  shuffled.row(0).swap(shuffled.row(5));
  shuffled.row(2).swap(shuffled.row(3));
  EXPECT_NEAR(decorrelation_loss(shuffled), decorrelation_loss(z), 1e-14);
  EXPECT_GE(decorrelation_loss(z), 0.0);
  EXPECT_THROW(decorrelation_loss(z.topRows(1)), InvalidArgument);
}

TEST(DecorrelationLossTest, MatchesElementwiseDefinition) {
  Rng rng(3);
  const Matrix z = normal_matrix(7, 4, rng);
  double expected = 0.0;
  for (Index k = 0; k < 4; ++k) {
    for (Index l = 0; l < 4; ++l) {
      if (k == l) continue;
      double c = 0.0;
      for (Index i = 0; i < 7; ++i) c += z(i, k) * z(i, l);
      c /= 7.0;
      expected += c * c;
    }
  }
  EXPECT_NEAR(decorrelation_loss(z), expected, 1e-13);
}

TEST(TotalLossTest, Composition) {
  Rng rng(4);
  const Matrix z = normal_matrix(8, 5, rng);
  const Matrix zp = normal_matrix(8, 5, rng);
  const LossBreakdown l = total_loss(z, zp, 0.01);
  EXPECT_EQ(l.trace_term, trace_loss(z, zp));
  EXPECT_EQ(l.decorrelation_term, decorrelation_loss(z));
  EXPECT_EQ(l.total, l.trace_term + 0.01 * l.decorrelation_term);
  EXPECT_EQ(l.gamma, 0.01);

  // Mixed form: the decorrelation term is taken on the anchors only.
  const Matrix zm = normal_matrix(8, 5, rng);
  const LossBreakdown m = total_loss(zm, zp, z, 0.01);
  EXPECT_EQ(m.trace_term, trace_loss(zm, zp));
  EXPECT_EQ(m.decorrelation_term, decorrelation_loss(z));
}

TEST(TotalLossTest, GammaZeroOnlyInAblation) {
  Rng rng(5);
  const Matrix z = normal_matrix(4, 3, rng);
  const Matrix zp = normal_matrix(4, 3, rng);
  EXPECT_THROW(total_loss(z, zp, 0.0), InvalidArgument);
  EXPECT_THROW(total_loss(z, zp, -0.1, GammaMode::kAblation), InvalidArgument);
  const LossBreakdown l = total_loss(z, zp, 0.0, GammaMode::kAblation);
  EXPECT_EQ(l.total, l.trace_term);
}

TEST(TotalLossTest, VanishesOnIdenticalOrthogonalPairs) {
  Matrix orth(4, 2);
  orth << 1, 1, 1, -1, -1, 1, -1, -1;
  EXPECT_EQ(total_loss(orth, orth, 0.005).total, 0.0);
}

TEST(LossGradientTest, ComponentsMatchFiniteDifferences) {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const Index b = 2 + trial % 5;
    const Index k = 1 + trial % 4;
    const Matrix z = normal_matrix(b, k, rng);
    const Matrix zp = normal_matrix(b, k, rng);
    for (auto red : {TraceReduction::kElementMean, TraceReduction::kPairMean}) {
      const Matrix fd = numeric_gradient([&](const Matrix& v) { return trace_loss(v, zp, red); }, z);
      EXPECT_LE(relative_error(trace_loss_gradient(z, zp, red), fd), 1e-7);
    }
    const Matrix fd = numeric_gradient([](const Matrix& v) { return decorrelation_loss(v); }, z);
    if (k > 1) EXPECT_LE(relative_error(decorrelation_loss_gradient(z), fd), 1e-7);
  }
}

TEST(LossGradientTest, TotalIsTracePlusGammaDecorrelation) {
  Rng rng(7);
  const double gamma = 0.3;
  for (int trial = 0; trial < 10; ++trial) {
    const Index b = 2 + trial % 6;
    const Index k = 2 + trial % 3;
    const Matrix zm = normal_matrix(b, k, rng);
    const Matrix zp = normal_matrix(b, k, rng);
    const Matrix z = normal_matrix(b, k, rng);
    const LossGradients g = total_loss_gradient(zm, zp, z, gamma);
    EXPECT_EQ(g.trace, trace_loss_gradient(zm, zp));
    EXPECT_EQ(g.target, Matrix(-trace_loss_gradient(zm, zp)));
    EXPECT_LT((g.anchor - gamma * decorrelation_loss_gradient(z)).cwiseAbs().maxCoeff(), 1e-15);

    auto total = [&](const Matrix& a, const Matrix& t, const Matrix& n) {
      return total_loss(a, t, n, gamma).total;
    };
    EXPECT_LE(relative_error(g.trace, numeric_gradient([&](const Matrix& v) { return total(v, zp, z); }, zm)), 1e-7);
    EXPECT_LE(relative_error(g.target, numeric_gradient([&](const Matrix& v) { return total(zm, v, z); }, zp)), 1e-7);
    EXPECT_LE(relative_error(g.anchor, numeric_gradient([&](const Matrix& v) { return total(zm, zp, v); }, z)), 1e-6);
  }
}

TEST(LossGradientTest, PullAndPushStructure) {
  Rng rng(8);
  const Index b = 6;
  const Matrix z = normal_matrix(b, 4, rng);
  const Matrix zp = normal_matrix(b, 4, rng);
  const Matrix gt = trace_loss_gradient(z, zp, TraceReduction::kPairMean);
  const Matrix gd = decorrelation_loss_gradient(z);
  const Matrix c = batch_correlation(z);
  for (Index i = 0; i < b; ++i) {
    const Vector pull = zp.row(i) - z.row(i);
    EXPECT_NEAR(gt.row(i).dot(pull), -gt.row(i).norm() * pull.norm(), 1e-12);

    const Vector w = negative_sample_weights(z, i);
    Vector push = Vector::Zero(4);
    for (Index j = 0; j < b; ++j) push += w(j) * z.row(j).transpose();
    push -= c.diagonal().cwiseProduct(z.row(i).transpose());
    EXPECT_LT((gd.row(i).transpose() - (4.0 / b) * push).cwiseAbs().maxCoeff(), 1e-12);
    for (Index j = 0; j < b; ++j) EXPECT_NEAR(w(j), z.row(i).dot(z.row(j)) / b, 1e-15);
  }
}

TEST(FrobeniusIdentityTest, Cases) {
  EXPECT_EQ(frobenius_identity_gap(Matrix::Zero(3, 2)), 0.0);
  Rng rng(9);
  EXPECT_LT(frobenius_identity_gap(normal_matrix(3, 2, rng)), 1e-12);
  Matrix eye(2, 2);
  eye << 1.0, 0.0, 0.0, 1.0;
  EXPECT_LT(frobenius_identity_gap(eye), 1e-12);
  for (int trial = 0; trial < 100; ++trial) {
    const Index b = 2 + trial % 15;
    const Index k = 1 + trial % 16;
    EXPECT_LT(frobenius_identity_gap(normal_matrix(b, k, rng)), 1e-10);
  }
}

TEST(AnchorGradientTest, Cases) {
  Matrix z(1, 2);
  z << 1.0, -2.0;
  Matrix zp(1, 2);
  zp << 0.5, 3.0;
  const Vector g = analytic_anchor_gradient(z, zp, 0.0, 0);
  EXPECT_DOUBLE_EQ(g(0), 1.0);
  EXPECT_DOUBLE_EQ(g(1), -10.0);
  EXPECT_TRUE(analytic_anchor_gradient(z, z, 0.0, 0).isZero(0.0));
  EXPECT_THROW(analytic_anchor_gradient(z, zp, 0.0, 1), InvalidArgument);
  EXPECT_THROW(analytic_anchor_gradient(z, zp, 0.0, -1), InvalidArgument);
}

// On standardized batches the closed form tracks the exact gradient of the
// pair-mean trace term plus gamma times decorrelation in direction; its
// decorrelation part carries half the exact weight.
TEST(AnchorGradientTest, DirectionAgreesWithExactGradient) {
  Rng rng(10);
  const double gamma = 0.01;
  for (int trial = 0; trial < 20; ++trial) {
    const Index b = 8 + trial % 9;
    const Matrix z = standardized(normal_matrix(b, 6, rng));
    const Matrix zp = standardized(normal_matrix(b, 6, rng));
    auto objective = [&](const Matrix& v) {
      return trace_loss(v, zp, TraceReduction::kPairMean) + gamma * decorrelation_loss(v);
    };
    const Matrix fd = numeric_gradient(objective, z);
    for (Index i = 0; i < b; ++i) {
      const Vector closed = analytic_anchor_gradient(z, zp, gamma, i);
      const Vector exact = fd.row(i).transpose();
      EXPECT_GE(closed.dot(exact) / (closed.norm() * exact.norm()), 0.99);
    }
  }
}

}  // namespace
}  // namespace dlem
