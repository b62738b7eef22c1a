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

#ifndef DLEM_GRAPH_HPP_
#define DLEM_GRAPH_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "dlem/types.hpp"

namespace dlem {

/// Dense symmetric similarity graph with cached vertex degrees.
///
/// Invariants enforced at construction: square, symmetric (exact), finite,
/// nonnegative, and every vertex has a strictly positive degree.
class WeightedGraph {
 public:
  explicit WeightedGraph(Matrix similarity);

  Index size() const noexcept { return similarity_.rows(); }
  const Matrix& similarity() const noexcept { return similarity_; }
  const Vector& degrees() const noexcept { return degrees_; }
  double similarity(Index i, Index j) const { return similarity_(i, j); }
  double degree(Index i) const { return degrees_(i); }

  /// Vol(X): sum of all degrees.
  double total_volume() const noexcept { return total_volume_; }

  /// Unnormalized Laplacian L = D - S.
  Matrix laplacian() const;

 private:
  Matrix similarity_;
  Vector degrees_;
  double total_volume_ = 0.0;
};

/// Assignment of every vertex to one of k nonempty clusters.
class Partition {
 public:
  Partition(std::vector<int> assignment, int k);

  int cluster_count() const noexcept { return k_; }
  Index size() const noexcept { return static_cast<Index>(assignment_.size()); }
  int cluster_of(Index vertex) const { return assignment_[static_cast<std::size_t>(vertex)]; }
  const std::vector<int>& assignment() const noexcept { return assignment_; }

  /// Vertex indices of cluster c, ascending.
  std::vector<Index> members(int c) const;
  /// Vertex indices outside cluster c, ascending.
  std::vector<Index> complement(int c) const;

 private:
  std::vector<int> assignment_;
  int k_;
};

/// One augmented view: the id of the raw sample it came from plus its features.
struct View {
  std::int64_t source_id;
  Vector features;
};

/// Connects views of the same source with `same_source_weight`; all other
/// pairs (and the diagonal) get similarity 0.
WeightedGraph build_augmentation_graph(std::span<const View> views,
                                       double same_source_weight);

/// Gaussian kernel graph exp(-|x_i - x_j|^2 / (2 bandwidth^2)) over the rows
/// of `points`, zero diagonal.
WeightedGraph build_kernel_graph(const Matrix& points, double bandwidth);

/// Median of all pairwise Euclidean distances between rows.
double median_pairwise_distance(const Matrix& points);

/// Median over points of the distance to their `neighbor`-th nearest
/// neighbour. Default bandwidth for build_kernel_graph: unlike the pairwise
/// median it tracks the local sampling density, so thin non-convex clusters
/// stay separated.
double median_knn_distance(const Matrix& points, int neighbor = 7);

/// Vol(C): sum of degrees over `subset`.
double volume(const WeightedGraph& g, std::span<const Index> subset);

/// Row-stochastic transition matrix P = D^-1 S.
Matrix random_walk_matrix(const WeightedGraph& g);

/// pi_i = d_i / Vol(X).
Vector stationary_distribution(const WeightedGraph& g);

/// P(to | from) = sum_{i in from, j in to} s_ij / Vol(from). Sets must be disjoint.
double subset_transition_probability(const WeightedGraph& g,
                                     std::span<const Index> from,
                                     std::span<const Index> to);

/// Volume-scaled cluster indicators: z_ik = 1/sqrt(Vol(C_k)) if i in C_k.
/// Satisfies Z^T D Z = I.
Matrix indicator_matrix(const WeightedGraph& g, const Partition& p);

/// Tr(Z^T L Z) for the indicator matrix of `p`. Each cut edge enters the
/// quadratic form in both orientations, so this is
/// sum_k P(complement(C_k) | C_k), not half of it.
double partition_cut_objective(const WeightedGraph& g, const Partition& p);

}  // namespace dlem

#endif  // DLEM_GRAPH_HPP_
