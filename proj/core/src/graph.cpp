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

#include "dlem/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "dlem/error.hpp"

namespace dlem {
namespace {

// Rejects out-of-range and repeated indices; returns a membership mask.
std::vector<bool> membership(const WeightedGraph& g, std::span<const Index> subset,
                             const char* name) {
  std::vector<bool> mask(static_cast<std::size_t>(g.size()), false);
  for (Index v : subset) {
    if (v < 0 || v >= g.size()) {
      throw InvalidArgument(std::string(name) + ": vertex index " + std::to_string(v) +
                            " out of range");
    }
    const auto slot = static_cast<std::size_t>(v);
    if (mask[slot]) {
      throw InvalidArgument(std::string(name) + ": vertex " + std::to_string(v) +
                            " listed twice");
    }
    mask[slot] = true;
  }
  return mask;
}

}  // namespace

WeightedGraph::WeightedGraph(Matrix similarity) : similarity_(std::move(similarity)) {
  const Index n = similarity_.rows();
  if (n < 1 || similarity_.cols() != n) {
    throw InvalidArgument("similarity matrix must be square and nonempty");
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const double s = similarity_(i, j);
      if (!std::isfinite(s) || s < 0.0) {
        throw InvalidArgument("similarity(" + std::to_string(i) + "," + std::to_string(j) +
                              ") must be finite and nonnegative");
      }
      if (s != similarity_(j, i)) {
        throw InvalidArgument("similarity matrix is not symmetric at (" +
                              std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }
  degrees_ = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    double d = 0.0;
    for (Index j = 0; j < n; ++j) d += similarity_(i, j);
    degrees_(i) = d;
  }
  for (Index i = 0; i < n; ++i) {
    if (!(degrees_(i) > 0.0)) {
      throw InvalidArgument("vertex " + std::to_string(i) + " is isolated (degree 0)");
    }
  }
  total_volume_ = degrees_.sum();
}

Matrix WeightedGraph::laplacian() const {
  Matrix l = -similarity_;
  l.diagonal() += degrees_;
  return l;
}

Partition::Partition(std::vector<int> assignment, int k)
    : assignment_(std::move(assignment)), k_(k) {
  if (k_ < 1) throw InvalidArgument("partition needs at least one cluster");
  std::vector<int> counts(static_cast<std::size_t>(k_), 0);
  for (int c : assignment_) {
    if (c < 0 || c >= k_) {
      throw InvalidArgument("cluster id " + std::to_string(c) + " outside 0.." +
                            std::to_string(k_));
    }
    ++counts[static_cast<std::size_t>(c)];
  }
  for (int c = 0; c < k_; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      throw InvalidArgument("cluster " + std::to_string(c) + " is empty");
    }
  }
}

std::vector<Index> Partition::members(int c) const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < assignment_.size(); ++i) {
    if (assignment_[i] == c) out.push_back(static_cast<Index>(i));
  }
  return out;
}

std::vector<Index> Partition::complement(int c) const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < assignment_.size(); ++i) {
    if (assignment_[i] != c) out.push_back(static_cast<Index>(i));
  }
  return out;
}

WeightedGraph build_augmentation_graph(std::span<const View> views,
                                       double same_source_weight) {
  if (views.size() < 2) throw InvalidArgument("augmentation graph needs at least 2 views");
  if (!(same_source_weight > 0.0) || !std::isfinite(same_source_weight)) {
    throw InvalidArgument("same_source_weight must be positive and finite");
  }
  std::map<std::int64_t, int> per_source;
  for (const View& v : views) ++per_source[v.source_id];
  if (per_source.size() < 2) {
    throw InvalidArgument("augmentation graph needs at least 2 distinct sources");
  }
  for (const auto& [source, count] : per_source) {
    if (count < 2) {
      throw InvalidArgument("source " + std::to_string(source) +
                            " has a single view and would be an isolated vertex");
    }
  }
  const auto n = static_cast<Index>(views.size());
  Matrix s = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (views[static_cast<std::size_t>(i)].source_id ==
          views[static_cast<std::size_t>(j)].source_id) {
        s(i, j) = same_source_weight;
        s(j, i) = same_source_weight;
      }
    }
  }
  return WeightedGraph(std::move(s));
}

WeightedGraph build_kernel_graph(const Matrix& points, double bandwidth) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw InvalidArgument("bandwidth must be positive and finite");
  }
  if (points.rows() < 2) throw InvalidArgument("kernel graph needs at least 2 points");
  if (!points.allFinite()) throw InvalidArgument("kernel graph points must be finite");
  const Index n = points.rows();
  const double scale = 1.0 / (2.0 * bandwidth * bandwidth);
  Matrix s = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double d2 = (points.row(i) - points.row(j)).squaredNorm();
      const double w = std::exp(-d2 * scale);
      s(i, j) = w;
      s(j, i) = w;
    }
  }
  return WeightedGraph(std::move(s));
}

double median_pairwise_distance(const Matrix& points) {
  const Index n = points.rows();
  if (n < 2) throw InvalidArgument("median distance needs at least 2 points");
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) d.push_back((points.row(i) - points.row(j)).norm());
  }
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  if (d.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(d.begin(), mid);
  return 0.5 * (lower + upper);
}

double median_knn_distance(const Matrix& points, int neighbor) {
  const Index n = points.rows();
  if (neighbor < 1 || neighbor >= n) {
    throw InvalidArgument("neighbour rank must lie in 1..n-1");
  }
  std::vector<double> kth(static_cast<std::size_t>(n));
  std::vector<double> row(static_cast<std::size_t>(n - 1));
  for (Index i = 0; i < n; ++i) {
    std::size_t m = 0;
    for (Index j = 0; j < n; ++j) {
      if (j != i) row[m++] = (points.row(i) - points.row(j)).norm();
    }
    const auto nth = row.begin() + (neighbor - 1);
    std::nth_element(row.begin(), nth, row.end());
    kth[static_cast<std::size_t>(i)] = *nth;
  }
  const auto mid = kth.begin() + static_cast<std::ptrdiff_t>(kth.size() / 2);
  std::nth_element(kth.begin(), mid, kth.end());
  if (kth.size() % 2 == 1) return *mid;
  return 0.5 * (*std::max_element(kth.begin(), mid) + *mid);
}

double volume(const WeightedGraph& g, std::span<const Index> subset) {
  if (subset.empty()) throw InvalidArgument("volume of an empty subset");
  membership(g, subset, "volume");
  double vol = 0.0;
  for (Index v : subset) vol += g.degree(v);
  return vol;
}

Matrix random_walk_matrix(const WeightedGraph& g) {
  // Degrees are positive by construction of WeightedGraph.
  return g.degrees().cwiseInverse().asDiagonal() * g.similarity();
}

Vector stationary_distribution(const WeightedGraph& g) {
  return g.degrees() / g.total_volume();
}

double subset_transition_probability(const WeightedGraph& g,
                                     std::span<const Index> from,
                                     std::span<const Index> to) {
  if (from.empty()) throw InvalidArgument("transition probability: empty source set");
  const auto from_mask = membership(g, from, "from");
  membership(g, to, "to");
  for (Index v : to) {
    if (from_mask[static_cast<std::size_t>(v)]) {
      throw InvalidArgument("transition probability: sets overlap at vertex " +
                            std::to_string(v));
    }
  }
  double cross = 0.0;
  for (Index i : from) {
    for (Index j : to) cross += g.similarity(i, j);
  }
  return cross / volume(g, from);
}

Matrix indicator_matrix(const WeightedGraph& g, const Partition& p) {
  if (p.size() != g.size()) {
    throw InvalidArgument("partition covers " + std::to_string(p.size()) +
                          " vertices, graph has " + std::to_string(g.size()));
  }
  const int k = p.cluster_count();
  Vector vol = Vector::Zero(k);
  for (Index i = 0; i < g.size(); ++i) vol(p.cluster_of(i)) += g.degree(i);
  Matrix z = Matrix::Zero(g.size(), k);
  for (Index i = 0; i < g.size(); ++i) {
    const int c = p.cluster_of(i);
    z(i, c) = 1.0 / std::sqrt(vol(c));
  }
  return z;
}

double partition_cut_objective(const WeightedGraph& g, const Partition& p) {
  const Matrix z = indicator_matrix(g, p);
  return (z.transpose() * g.laplacian() * z).trace();
}

}  // namespace dlem
