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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <string>

#include "dlem/csv.hpp"
#include "dlem/error.hpp"

namespace dlem {

UnlabeledFeatures::UnlabeledFeatures(Matrix features) : features_(std::move(features)) {
  if (features_.rows() < 1 || features_.cols() < 1) throw InvalidArgument("empty feature matrix");
  if (!features_.allFinite()) throw InvalidArgument("features must be finite");
}

void Dataset::validate() const {
  if (features.rows() < 1 || features.cols() < 1) throw InvalidArgument("empty dataset");
  if (!features.allFinite()) throw InvalidArgument("dataset features must be finite");
  if (!labels) return;
  if (static_cast<Index>(labels->size()) != features.rows()) {
    throw InvalidArgument("label count does not match row count");
  }
  if (class_count < 1) throw InvalidArgument("labelled dataset needs class_count >= 1");
  std::vector<int> counts(static_cast<std::size_t>(class_count), 0);
  for (int y : *labels) {
    if (y < 0 || y >= class_count) {
      throw InvalidArgument("label " + std::to_string(y) + " outside 0.." +
                            std::to_string(class_count));
    }
    ++counts[static_cast<std::size_t>(y)];
  }
  for (int c = 0; c < class_count; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      throw InvalidArgument("class " + std::to_string(c) + " has no samples");
    }
  }
}

const std::vector<int>& Dataset::label_vector() const {
  if (!labels) throw InvalidArgument("dataset is unlabelled");
  return *labels;
}

void AugmentationPolicy::validate() const {
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw InvalidArgument("noise_sigma must be finite and >= 0");
  }
  if (!(scale_lo > 0.0) || !(scale_lo <= scale_hi) || !std::isfinite(scale_hi)) {
    throw InvalidArgument("scale range must satisfy 0 < lo <= hi");
  }
  if (!(mask_prob >= 0.0 && mask_prob < 1.0)) throw InvalidArgument("mask_prob must lie in [0, 1)");
}

AugmentationPolicy default_policy(const Matrix& features) {
  if (features.rows() < 1) throw InvalidArgument("default_policy needs data");
  const Eigen::RowVectorXd mean = features.colwise().mean();
  const double mean_var =
      (features.rowwise() - mean).cwiseAbs2().colwise().mean().mean();
  AugmentationPolicy p;
  p.noise_sigma = 0.1 * std::sqrt(mean_var);
  p.scale_lo = 0.8;
  p.scale_hi = 1.2;
  p.mask_prob = 0.1;
  return p;
}

Vector augment(const Vector& x, const AugmentationPolicy& policy, Rng& rng) {
  if (!x.allFinite()) throw InvalidArgument("augment: non-finite input");
  std::uniform_real_distribution<double> scale(policy.scale_lo, policy.scale_hi);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::bernoulli_distribution mask(policy.mask_prob);
  Vector out = x * scale(rng);
  for (Index i = 0; i < out.size(); ++i) out(i) += policy.noise_sigma * noise(rng);
  for (Index i = 0; i < out.size(); ++i) {
    if (mask(rng)) out(i) = 0.0;
  }
  return out;
}

Dataset generate_blobs(int classes, int per_class, int dim, double separation,
                       std::uint64_t seed) {
  if (classes < 2 || per_class < 1 || dim < 1) {
    throw InvalidArgument("blobs need classes >= 2, per_class >= 1, dim >= 1");
  }
  if (classes > dim) throw InvalidArgument("blobs need dim >= classes (one axis per class)");
  if (!std::isfinite(separation)) throw InvalidArgument("separation must be finite");
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset ds;
  ds.features.resize(static_cast<Index>(classes) * per_class, dim);
  ds.labels.emplace();
  ds.class_count = classes;
  Index row = 0;
  for (int c = 0; c < classes; ++c) {
    for (int i = 0; i < per_class; ++i, ++row) {
      for (int j = 0; j < dim; ++j) ds.features(row, j) = noise(rng);
      ds.features(row, c) += separation;
      ds.labels->push_back(c);
    }
  }
  return ds;
}

namespace {
void check_curve_args(int per_class, double noise) {
  if (per_class < 1) throw InvalidArgument("per_class must be >= 1");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw InvalidArgument("noise must be >= 0");
}
}  // namespace

Dataset generate_moons(int per_class, double noise, std::uint64_t seed) {
  check_curve_args(per_class, noise);
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Dataset ds;
  ds.features.resize(2 * static_cast<Index>(per_class), 2);
  ds.labels.emplace();
  ds.class_count = 2;
  const double step = per_class > 1 ? std::numbers::pi / (per_class - 1) : 0.0;
  Index row = 0;
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < per_class; ++i, ++row) {
      const double t = step * i;
      const double px = c == 0 ? std::cos(t) : 1.0 - std::cos(t);
      const double py = c == 0 ? std::sin(t) : 0.5 - std::sin(t);
      ds.features(row, 0) = px + noise * gauss(rng);
      ds.features(row, 1) = py + noise * gauss(rng);
      ds.labels->push_back(c);
    }
  }
  return ds;
}

Dataset generate_rings(int classes, int per_class, double noise, std::uint64_t seed) {
  if (classes < 2) throw InvalidArgument("rings need classes >= 2");
  check_curve_args(per_class, noise);
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Dataset ds;
  ds.features.resize(static_cast<Index>(classes) * per_class, 2);
  ds.labels.emplace();
  ds.class_count = classes;
  Index row = 0;
  for (int c = 0; c < classes; ++c) {
    const double radius = 1.0 + 2.0 * c;
    for (int i = 0; i < per_class; ++i, ++row) {
      const double angle = 2.0 * std::numbers::pi * i / per_class;
      ds.features(row, 0) = radius * std::cos(angle) + noise * gauss(rng);
      ds.features(row, 1) = radius * std::sin(angle) + noise * gauss(rng);
      ds.labels->push_back(c);
    }
  }
  return ds;
}

PairedBatchStream::PairedBatchStream(UnlabeledFeatures data, AugmentationPolicy policy,
                                     Index batch_size, std::uint64_t seed)
    : data_(std::move(data)), policy_(policy), batch_size_(batch_size), rng_(seed) {
  policy_.validate();
  if (batch_size_ < 2) throw InvalidArgument("batch size must be >= 2");
  if (batch_size_ > data_.size()) {
    throw InvalidArgument("batch size " + std::to_string(batch_size_) + " exceeds dataset size " +
                          std::to_string(data_.size()));
  }
}

std::vector<PairedBatch> PairedBatchStream::next_epoch() {
  std::vector<Index> order(static_cast<std::size_t>(data_.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng_);
  const Matrix& f = data_.features();
  std::vector<PairedBatch> epoch;
  epoch.reserve(static_cast<std::size_t>(batches_per_epoch()));
  for (Index b = 0; b < batches_per_epoch(); ++b) {
    PairedBatch batch;
    batch.x.resize(batch_size_, f.cols());
    batch.x_pos.resize(batch_size_, f.cols());
    for (Index r = 0; r < batch_size_; ++r) {
      const Index src = order[static_cast<std::size_t>(b * batch_size_ + r)];
      const Vector raw = f.row(src).transpose();
      batch.x.row(r) = augment(raw, policy_, rng_).transpose();
      batch.x_pos.row(r) = augment(raw, policy_, rng_).transpose();
      batch.source_ids.push_back(src);
    }
    epoch.push_back(std::move(batch));
  }
  return epoch;
}

Dataset read_dataset_csv(std::istream& in, bool has_label_column) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::is_blank(line)) continue;
    const auto cells = csv::split(line);
    const std::size_t offset = has_label_column ? 1 : 0;
    if (cells.size() <= offset) throw ParseError("row has no feature columns", line_no);
    if (width == 0) {
      width = cells.size();
    } else if (cells.size() != width) {
      throw ParseError("ragged row: expected " + std::to_string(width) + " fields, got " +
                           std::to_string(cells.size()),
                       line_no);
    }
    if (has_label_column) {
      const long long y = csv::parse_int(cells[0], line_no);
      if (y < 0 || y > 1'000'000) throw ParseError("label out of range: " + std::to_string(y), line_no);
      labels.push_back(static_cast<int>(y));
    }
    std::vector<double> row;
    row.reserve(cells.size() - offset);
    for (std::size_t i = offset; i < cells.size(); ++i) {
      const double v = csv::parse_double(cells[i], line_no);
      if (!std::isfinite(v)) throw ParseError("non-finite value", line_no);
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("dataset file has no rows", line_no);
  Dataset ds;
  ds.features.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      ds.features(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    }
  }
  if (has_label_column) {
    ds.class_count = *std::max_element(labels.begin(), labels.end()) + 1;
    ds.labels = std::move(labels);
  }
  ds.validate();
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, bool has_label_column) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset " + path.string());
  return read_dataset_csv(in, has_label_column);
}

void write_dataset_csv(const Dataset& ds, std::ostream& out) {
  for (Index r = 0; r < ds.size(); ++r) {
    if (ds.labels) out << (*ds.labels)[static_cast<std::size_t>(r)] << ',';
    for (Index c = 0; c < ds.dim(); ++c) {
      if (c > 0) out << ',';
      out << csv::format_double(ds.features(r, c));
    }
    out << '\n';
  }
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset " + path.string());
  write_dataset_csv(ds, out);
}

}  // namespace dlem
