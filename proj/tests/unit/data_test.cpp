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

#include "dlem/data.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <set>
#include <sstream>
#include <vector>

#include "dlem/error.hpp"
#include "test_support.hpp"

namespace dlem {
namespace {

// Accuracy of assigning each row to the nearest class mean, with means
// estimated on `train` and scored on `test`.
double nearest_mean_accuracy(const Dataset& train, const Dataset& test) {
  Matrix means = Matrix::Zero(train.class_count, train.dim());
  Vector counts = Vector::Zero(train.class_count);
  for (Index i = 0; i < train.size(); ++i) {
    const int y = train.label_vector()[static_cast<std::size_t>(i)];
    means.row(y) += train.features.row(i);
    counts(y) += 1.0;
  }
  means.array().colwise() /= counts.array();
  int hits = 0;
  for (Index i = 0; i < test.size(); ++i) {
    Index best = 0;
    (means.rowwise() - test.features.row(i)).rowwise().squaredNorm().minCoeff(&best);
    hits += static_cast<int>(best) == test.label_vector()[static_cast<std::size_t>(i)] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

TEST(BlobsTest, SeparationControlsAccuracy) {
  const Dataset far_train = generate_blobs(4, 200, 8, 20.0, 1);
  const Dataset far_test = generate_blobs(4, 200, 8, 20.0, 2);
  EXPECT_GT(nearest_mean_accuracy(far_train, far_test), 0.99);

  const Dataset flat_train = generate_blobs(4, 500, 8, 0.0, 1);
  const Dataset flat_test = generate_blobs(4, 500, 8, 0.0, 2);
  EXPECT_NEAR(nearest_mean_accuracy(flat_train, flat_test), 0.25, 0.05);
}

TEST(BlobsTest, LayoutAndDeterminism) {
  const Dataset a = generate_blobs(3, 5, 4, 2.0, 7);
  const Dataset b = generate_blobs(3, 5, 4, 2.0, 7);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.size(), 15);
  EXPECT_EQ(a.class_count, 3);
  EXPECT_EQ(a.label_vector()[0], 0);
  EXPECT_EQ(a.label_vector()[14], 2);
  EXPECT_NE(generate_blobs(3, 5, 4, 2.0, 8).features, a.features);
  EXPECT_THROW(generate_blobs(1, 5, 4, 2.0, 0), InvalidArgument);
  EXPECT_THROW(generate_blobs(3, 0, 4, 2.0, 0), InvalidArgument);
  EXPECT_THROW(generate_blobs(3, 5, 0, 2.0, 0), InvalidArgument);
}

TEST(MoonsTest, NoiselessPointsLieOnArcs) {
  const Dataset ds = generate_moons(50, 0.0, 3);
  for (Index i = 0; i < ds.size(); ++i) {
    const double x = ds.features(i, 0);
    const double y = ds.features(i, 1);
    const double r = ds.label_vector()[static_cast<std::size_t>(i)] == 0
                         ? std::hypot(x, y)
                         : std::hypot(x - 1.0, y - 0.5);
    EXPECT_NEAR(r, 1.0, 1e-12);
  }
  EXPECT_THROW(generate_moons(0, 0.0, 0), InvalidArgument);
  EXPECT_THROW(generate_moons(10, -0.1, 0), InvalidArgument);
}

TEST(RingsTest, NoiselessRadii) {
  const Dataset ds = generate_rings(2, 40, 0.0, 4);
  for (Index i = 0; i < ds.size(); ++i) {
    const double expected = ds.label_vector()[static_cast<std::size_t>(i)] == 0 ? 1.0 : 3.0;
    EXPECT_NEAR(ds.features.row(i).norm(), expected, 1e-12);
  }
  EXPECT_EQ(generate_rings(2, 40, 0.1, 4).features, generate_rings(2, 40, 0.1, 4).features);
}

TEST(AugmentTest, NullPolicyIsIdentity) {
  Rng rng(5);
  const Vector x = testing::normal_matrix(6, 1, rng).col(0);
  EXPECT_EQ(augment(x, AugmentationPolicy{}, rng), x);
}

TEST(AugmentTest, MaskFraction) {
  Rng rng(6);
  AugmentationPolicy p;
  p.mask_prob = 0.5;
  const Vector x = Vector::Ones(10000);
  const Vector y = augment(x, p, rng);
  const double zeroed = static_cast<double>((y.array() == 0.0).count()) / 10000.0;
  EXPECT_NEAR(zeroed, 0.5, 0.02);
}

TEST(AugmentTest, StochasticAndShapePreserving) {
  Rng rng(7);
  const Vector x = Vector::Ones(16);
  const AugmentationPolicy p = {0.3, 0.8, 1.2, 0.1};
  const Vector a = augment(x, p, rng);
  const Vector b = augment(x, p, rng);
  EXPECT_NE(a, b);
  EXPECT_EQ(a.size(), 16);
  EXPECT_TRUE(a.allFinite());
}

TEST(AugmentTest, PolicyValidation) {
  EXPECT_THROW((AugmentationPolicy{-1.0, 1.0, 1.0, 0.0}.validate()), InvalidArgument);
  EXPECT_THROW((AugmentationPolicy{0.0, 0.0, 1.0, 0.0}.validate()), InvalidArgument);
  EXPECT_THROW((AugmentationPolicy{0.0, 1.2, 1.0, 0.0}.validate()), InvalidArgument);
  EXPECT_THROW((AugmentationPolicy{0.0, 1.0, 1.0, 1.0}.validate()), InvalidArgument);
  EXPECT_NO_THROW((AugmentationPolicy{0.1, 0.8, 1.2, 0.1}.validate()));
}

TEST(AugmentTest, DefaultPolicy) {
  Matrix x(4, 2);
  x << 0, 0, 2, 0, 0, 2, 2, 2;  // population std 1 in both columns
  const AugmentationPolicy p = default_policy(x);
  EXPECT_NEAR(p.noise_sigma, 0.1, 1e-15);
  EXPECT_EQ(p.scale_lo, 0.8);
  EXPECT_EQ(p.scale_hi, 1.2);
  EXPECT_EQ(p.mask_prob, 0.1);
}

TEST(PairedBatchTest, NullPolicyPairsAreIdentical) {
  const Dataset ds = generate_blobs(2, 10, 3, 1.0, 1);
  PairedBatchStream stream(ds.unlabeled(), AugmentationPolicy{}, 4, 9);
  for (const PairedBatch& b : stream.next_epoch()) {
    EXPECT_EQ(b.x, b.x_pos);
    for (Index i = 0; i < 4; ++i) {
      EXPECT_EQ(b.x.row(i), ds.features.row(b.source_ids[static_cast<std::size_t>(i)]));
    }
  }
}

TEST(PairedBatchTest, EpochCoversSourcesOnce) {
  const Dataset ds = generate_blobs(2, 11, 3, 1.0, 1);  // N = 22
  PairedBatchStream stream(ds.unlabeled(), default_policy(ds.features), 5, 3);
  EXPECT_EQ(stream.batches_per_epoch(), 4);
  for (int epoch = 0; epoch < 3; ++epoch) {
    const std::vector<PairedBatch> batches = stream.next_epoch();
    ASSERT_EQ(batches.size(), 4u);
    std::set<Index> seen;
    for (const PairedBatch& b : batches) {
      EXPECT_EQ(b.x.rows(), 5);
      EXPECT_EQ(b.x_pos.rows(), 5);
      seen.insert(b.source_ids.begin(), b.source_ids.end());
    }
    EXPECT_EQ(seen.size(), 20u);
  }
}

TEST(PairedBatchTest, DeterministicPerSeed) {
  const Dataset ds = generate_blobs(2, 8, 3, 1.0, 1);
  const AugmentationPolicy p = default_policy(ds.features);
  PairedBatchStream a(ds.unlabeled(), p, 4, 5);
  PairedBatchStream b(ds.unlabeled(), p, 4, 5);
  for (int epoch = 0; epoch < 2; ++epoch) {
    const auto ea = a.next_epoch();
    const auto eb = b.next_epoch();
    for (std::size_t i = 0; i < ea.size(); ++i) {
      EXPECT_EQ(ea[i].x, eb[i].x);
      EXPECT_EQ(ea[i].x_pos, eb[i].x_pos);
      EXPECT_EQ(ea[i].source_ids, eb[i].source_ids);
    }
  }
  EXPECT_THROW(PairedBatchStream(ds.unlabeled(), p, 17, 0), InvalidArgument);
  EXPECT_THROW(PairedBatchStream(ds.unlabeled(), p, 1, 0), InvalidArgument);
}

TEST(CsvTest, ParsesLabelledRow) {
  std::istringstream in("1,0.5,2.0\n0,1,1\n");
  const Dataset ds = read_dataset_csv(in, true);
  EXPECT_EQ(ds.label_vector(), (std::vector<int>{1, 0}));
  EXPECT_EQ(ds.features(0, 0), 0.5);
  EXPECT_EQ(ds.features(0, 1), 2.0);
  EXPECT_EQ(ds.class_count, 2);
}

TEST(CsvTest, RoundTrip) {
  const Dataset ds = generate_blobs(3, 7, 4, 2.5, 11);
  std::stringstream buf;
  write_dataset_csv(ds, buf);
  const Dataset back = read_dataset_csv(buf, true);
  EXPECT_EQ(back.features, ds.features);
  EXPECT_EQ(back.labels, ds.labels);

  Dataset unlabeled{ds.features, std::nullopt, 0};
  const auto path = std::filesystem::temp_directory_path() / "dlem_data_test.csv";
  save_csv(unlabeled, path);
  const Dataset loaded = load_csv(path, false);
  EXPECT_EQ(loaded.features, ds.features);
  EXPECT_FALSE(loaded.labeled());
  std::filesystem::remove(path);
}

TEST(CsvTest, ErrorsNameTheLine) {
  auto line_of = [](const std::string& text, bool labels) -> std::size_t {
    std::istringstream in(text);
    try {
      read_dataset_csv(in, labels);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("1,2\n3,4,5\n", false), 2u);
  EXPECT_EQ(line_of("1,2\n3,x\n", false), 2u);
  EXPECT_EQ(line_of("0,1\n-1,2\n", true), 2u);
  EXPECT_EQ(line_of("0,1\n1.5,2\n", true), 2u);
}

}  // namespace
}  // namespace dlem
