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

#include "dlem/fewshot.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "dlem/checkpoint.hpp"
#include "dlem/error.hpp"
#include "dlem/trainer.hpp"
#include "test_support.hpp"

namespace dlem {
namespace {

using testing::normal_matrix;

Dataset one_hot_dataset(int classes, int per_class) {
  Dataset ds;
  ds.features = Matrix::Zero(classes * per_class, classes);
  ds.labels = std::vector<int>();
  ds.class_count = classes;
  for (int c = 0; c < classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      ds.features(c * per_class + i, c) = 1.0;
      ds.labels->push_back(c);
    }
  }
  return ds;
}

TEST(EpisodeTest, ShapesAndAccounting) {
  const Dataset ds = generate_blobs(8, 30, 8, 3.0, 1);
  Rng rng(2);
  const Episode ep = sample_episode(ds, 5, 1, 15, rng);
  EXPECT_EQ(ep.support.rows(), 5);
  EXPECT_EQ(ep.query.rows(), 75);
  EXPECT_EQ(ep.support_labels.size(), 5u);
  EXPECT_EQ(ep.query_labels.size(), 75u);
  for (int c = 0; c < 5; ++c) {
    EXPECT_EQ(std::count(ep.query_labels.begin(), ep.query_labels.end(), c), 15);
    EXPECT_EQ(std::count(ep.support_labels.begin(), ep.support_labels.end(), c), 1);
  }
  std::set<Index> support(ep.support_rows.begin(), ep.support_rows.end());
  for (Index q : ep.query_rows) EXPECT_EQ(support.count(q), 0u);
  std::set<int> classes(ep.classes.begin(), ep.classes.end());
  EXPECT_EQ(classes.size(), 5u);
  for (std::size_t i = 0; i < ep.query_rows.size(); ++i) {
    const int label = ep.query_labels[i];
    EXPECT_EQ(ds.label_vector()[static_cast<std::size_t>(ep.query_rows[i])],
              ep.classes[static_cast<std::size_t>(label)]);
    EXPECT_EQ(ep.query.row(static_cast<Index>(i)), ds.features.row(ep.query_rows[i]));
  }
}

TEST(EpisodeTest, DeterministicPerRngState) {
  const Dataset ds = generate_blobs(6, 25, 6, 3.0, 1);
  Rng a(7);
  Rng b(7);
  const Episode ea = sample_episode(ds, 5, 5, 15, a);
  const Episode eb = sample_episode(ds, 5, 5, 15, b);
  EXPECT_EQ(ea.support_rows, eb.support_rows);
  EXPECT_EQ(ea.query_rows, eb.query_rows);
}

TEST(EpisodeTest, RejectsShortClasses) {
  const Dataset ds = generate_blobs(5, 10, 6, 3.0, 1);
  Rng rng(1);
  try {
    sample_episode(ds, 5, 1, 15, rng);
    FAIL() << "expected InvalidArgument";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("class"), std::string::npos);
  }
  EXPECT_THROW(sample_episode(ds, 6, 1, 2, rng), InvalidArgument);
  Dataset unlabeled = ds;
  unlabeled.labels.reset();
  EXPECT_THROW(sample_episode(unlabeled, 2, 1, 2, rng), InvalidArgument);
}

TEST(ProbeTest, SeparableSupportIsFitExactly) {
  Matrix x(6, 2);
  x << -2, 0, -1.5, 0.3, -1, -0.2, 1, 0.1, 1.4, -0.3, 2, 0.0;
  const std::vector<int> y = {0, 0, 0, 1, 1, 1};
  const ProbeModel m = fit_probe(x, y, 2, ProbeOptions{0.01});
  EXPECT_EQ(m.predict(x), y);
  EXPECT_LT(m.gradient_norm, 1e-5);
  EXPECT_TRUE(m.weights.allFinite());
}

TEST(ProbeTest, HeavyRegularizationGivesUniformPredictions) {
  Rng rng(3);
  const Matrix x = normal_matrix(30, 4, rng);
  std::vector<int> y(30);
  for (int i = 0; i < 30; ++i) y[static_cast<std::size_t>(i)] = i % 3;
  const ProbeModel m = fit_probe(x, y, 3, ProbeOptions{1e6});
  const Matrix p = m.probabilities(x);
  EXPECT_LT((p.array() - 1.0 / 3.0).abs().maxCoeff(), 1e-3);
}

TEST(ProbeTest, ObjectiveNeverExceedsZeroModel) {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x = normal_matrix(20, 5, rng);
    std::vector<int> y(20);
    for (int& v : y) v = static_cast<int>(rng() % 4);
    y[0] = 0;
    y[1] = 1;
    y[2] = 2;
    y[3] = 3;
    ProbeModel zero;
    zero.weights = Matrix::Zero(4, 5);
    zero.bias = Vector::Zero(4);
    zero.reg_strength = 0.5;
    const ProbeModel m = fit_probe(x, y, 4, ProbeOptions{0.5});
    EXPECT_LE(probe_objective(m, x, y), probe_objective(zero, x, y));
  }
}

TEST(ProbeTest, MoreIterationsNeverRaiseTheObjective) {
  Rng rng(5);
  const Matrix x = normal_matrix(25, 6, rng);
  std::vector<int> y(25);
  for (int i = 0; i < 25; ++i) y[static_cast<std::size_t>(i)] = i % 5;
  double prev = 1e300;
  for (int iters : {1, 2, 4, 8, 16, 32, 64, 128}) {
    ProbeOptions o{0.05};
    o.max_iterations = iters;
    const ProbeModel m = fit_probe(x, y, 5, o);
    const double f = probe_objective(m, x, y);
    EXPECT_LE(f, prev + 1e-15);
    prev = f;
  }
}

TEST(ProbeTest, GradientMatchesFiniteDifferencesAtOptimum) {
  Rng rng(6);
  const Matrix x = normal_matrix(15, 3, rng);
  std::vector<int> y(15);
  for (int i = 0; i < 15; ++i) y[static_cast<std::size_t>(i)] = i % 3;
  const ProbeModel m = fit_probe(x, y, 3, ProbeOptions{0.2});
  auto f = [&](const Matrix& w) {
    ProbeModel p = m;
    p.weights = w;
    return probe_objective(p, x, y);
  };
  EXPECT_LT(testing::numeric_gradient(f, m.weights).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(ProbeTest, RejectsBadInput) {
  Matrix x = Matrix::Ones(4, 2);
  const std::vector<int> y = {0, 1, 0, 1};
  EXPECT_THROW(fit_probe(x, y, 1), InvalidArgument);
  EXPECT_THROW(fit_probe(x, y, 2, ProbeOptions{0.0}), InvalidArgument);
  x(0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(fit_probe(x, y, 2), InvalidArgument);
}

TEST(FewShotTest, PerfectFeatures) {
  const Dataset ds = one_hot_dataset(6, 20);
  FewShotProtocol p;
  p.episodes = 50;
  const FewShotResult r = evaluate_fewshot(ds.features, ds.label_vector(), ds.class_count, p, 1);
  EXPECT_EQ(r.mean_accuracy, 1.0);
  EXPECT_EQ(r.ci95, 0.0);
  EXPECT_EQ(r.accuracies.size(), 50u);
}

// The pool must be large: with few rows per class every class carries a
// fixed sample-mean offset shared by its support and query rows, which a
// probe can exploit above chance.
TEST(FewShotTest, NoiseFeaturesAreAtChance) {
  Rng rng(8);
  const int classes = 10;
  const Matrix x = normal_matrix(classes * 1000, 16, rng);
  std::vector<int> y(static_cast<std::size_t>(x.rows()));
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % classes);
  FewShotProtocol p;  // 5-way 1-shot, 600 episodes
  const FewShotResult r = evaluate_fewshot(x, y, classes, p, 3);
  EXPECT_NEAR(r.mean_accuracy, 0.2, std::max(r.ci95, 0.01));
  EXPECT_GT(r.ci95, 0.0);
}

TEST(FewShotTest, EpisodeSeedsAreIndependentOfOrder) {
  const Dataset ds = generate_blobs(6, 20, 6, 2.0, 4);
  FewShotProtocol p;
  p.episodes = 10;
  const FewShotResult a = evaluate_fewshot(ds.features, ds.label_vector(), 6, p, 9);
  p.episodes = 4;
  const FewShotResult b = evaluate_fewshot(ds.features, ds.label_vector(), 6, p, 9);
  for (std::size_t e = 0; e < 4; ++e) EXPECT_EQ(a.accuracies[e], b.accuracies[e]);
  p.episodes = 1;
  EXPECT_THROW(evaluate_fewshot(ds.features, ds.label_vector(), 6, p, 9), InvalidArgument);
}

TEST(FewShotTest, EncoderIsNotMutated) {
  const Dataset ds = generate_blobs(5, 20, 6, 3.0, 2);
  const MlpEncoder enc = init_encoder(std::vector<int>{6, 16, 16, 8}, 3);
  const auto before = encode_checkpoint(enc);
  const std::uint64_t generation = enc.generation();
  FewShotProtocol p;
  p.episodes = 5;
  evaluate_fewshot(enc, ds, p, 0, enc.layer_count());
  evaluate_fewshot(enc, ds, p, 0, default_probe_blocks(enc));
  EXPECT_EQ(encode_checkpoint(enc), before);
  EXPECT_EQ(enc.generation(), generation);
  EXPECT_THROW(evaluate_fewshot(enc, ds, p, 0, 0), InvalidArgument);
  EXPECT_THROW(evaluate_fewshot(enc, ds, p, 0, 4), InvalidArgument);
}

TEST(FewShotTest, ProtocolName) {
  FewShotProtocol p;
  p.n_way = 3;
  p.k_shot = 5;
  EXPECT_EQ(p.name(), "3-way-5-shot");
}

TEST(LinearEvalTest, ScheduleSteps) {
  const LinearSchedule s;
  EXPECT_DOUBLE_EQ(s.rate_at(0), 0.3);
  EXPECT_DOUBLE_EQ(s.rate_at(59), 0.3);
  EXPECT_NEAR(s.rate_at(60), 0.03, 1e-15);
  EXPECT_NEAR(s.rate_at(80), 0.003, 1e-15);
}

TEST(LinearEvalTest, SeparableBlobs) {
  const Dataset ds = generate_blobs(4, 50, 6, 8.0, 5);
  LinearSchedule s;
  s.epochs = 30;
  const double acc = linear_evaluation(ds.features, ds.label_vector(), ds.features,
                                       ds.label_vector(), 4, s);
  EXPECT_GT(acc, 0.99);
}

TEST(LinearEvalTest, PermutedLabelsGiveChance) {
  const Dataset train_set = generate_blobs(4, 200, 6, 4.0, 5);
  const Dataset test_set = generate_blobs(4, 200, 6, 4.0, 6);
  std::vector<int> shuffled = train_set.label_vector();
  Rng rng(7);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  LinearSchedule s;
  s.epochs = 30;
  s.milestones = {18, 24};
  const double acc = linear_evaluation(train_set.features, shuffled, test_set.features,
                                       test_set.label_vector(), 4, s);
  EXPECT_NEAR(acc, 0.25, 0.05);
}

TEST(LinearEvalTest, TrainedBeatsUntrainedBeatsChance) {
  const Dataset train_set = generate_blobs(4, 60, 16, 3.0, 11);
  const Dataset test_set = generate_blobs(4, 60, 16, 3.0, 12);
  const MlpEncoder untrained = init_encoder(std::vector<int>{16, 64, 64, 8}, 2);
  MlpEncoder trained = untrained;
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.augmentation = AugmentationPolicy{0.5, 0.8, 1.2, 0.1};
  train(trained, train_set.unlabeled(), cfg);

  LinearSchedule s;
  s.epochs = 40;
  s.milestones = {24, 32};
  const double base = linear_evaluation(untrained, train_set, test_set, s, 3);
  const double ours = linear_evaluation(trained, train_set, test_set, s, 3);
  EXPECT_GT(base, 0.25 + 0.05);
  EXPECT_GT(ours, base);
}

TEST(LinearEvalTest, ClassSetMismatchRejected) {
  const Dataset a = generate_blobs(3, 10, 4, 3.0, 1);
  Dataset b = generate_blobs(3, 10, 4, 3.0, 2);
  std::vector<int> only_two = b.label_vector();
  for (int& y : only_two) y = std::min(y, 1);
  EXPECT_THROW(linear_evaluation(a.features, a.label_vector(), b.features, only_two, 3),
               InvalidArgument);
  const Dataset four = generate_blobs(4, 10, 4, 3.0, 2);
  const MlpEncoder enc = init_encoder(std::vector<int>{4, 8, 4}, 1);
  EXPECT_THROW(linear_evaluation(enc, a, four, LinearSchedule{}, 2), InvalidArgument);
}

}  // namespace
}  // namespace dlem
