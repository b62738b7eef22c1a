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

#ifndef DLEM_SPECTRAL_HPP_
#define DLEM_SPECTRAL_HPP_

#include <algorithm>
#include <span>
#include <utility>
#include <vector>

#include "dlem/graph.hpp"
#include "dlem/types.hpp"

namespace dlem {

struct JacobiOptions {
  double off_diagonal_tolerance = 1e-12;  // Frobenius norm of the off-diagonal part
  int max_sweeps = 100;
};

/// Eigendecomposition of a dense symmetric matrix, eigenvalues ascending and
/// eigenvectors in the matching columns.
struct SymmetricEigen {
  Vector eigenvalues;
  Matrix eigenvectors;
  int sweeps = 0;
  double off_diagonal_norm = 0.0;
};

/// Cyclic Jacobi rotations. Throws ConvergenceError (carrying the achieved
/// off-diagonal norm) when the sweep cap is reached first.
SymmetricEigen jacobi_eigensolver(const Matrix& symmetric, const JacobiOptions& options = {});

/// k smallest generalized eigenpairs of L z = lambda D z.
struct EigenmapResult {
  Vector eigenvalues;  // ascending
  Matrix embedding;    // n x k, Z^T D Z = I
  double residual = 0.0;  // max_k |L z_k - lambda_k D z_k|_inf
};

/// Solves the relaxed trace minimisation min Tr(Z^T L Z) s.t. Z^T D Z = I.
///
/// Reduces to the symmetric problem D^-1/2 L D^-1/2 v = lambda v, solves it
/// with jacobi_eigensolver and maps back with z = D^-1/2 v. Each column is
/// signed so that its largest-magnitude entry is positive. Within a repeated
/// eigenvalue any orthonormal basis of the eigenspace may be returned.
EigenmapResult generalized_eigenmaps(const WeightedGraph& g, int k,
                                     const JacobiOptions& options = {});

/// Tr(Z^T L Z).
double trace_objective(const WeightedGraph& g, const Matrix& z);

struct OptimalPartition {
  Partition partition;
  double objective;
};

/// Exhaustive minimiser of Tr(Z^T L Z) over all partitions into exactly k
/// nonempty clusters. Limited to n <= 12 and k <= 3. Ties resolve to the first
/// partition in restricted-growth order.
OptimalPartition brute_force_optimal_partition(const WeightedGraph& g, int k);

/// Calls `visit` with every partition of n vertices into exactly k nonempty
/// clusters, each set partition once (labels in restricted-growth form).
template <typename Visitor>
void for_each_set_partition(int n, int k, Visitor&& visit);

/// Two-way split by the sign of a vector (entries >= 0 go to cluster 1).
std::vector<int> sign_split(const Vector& v);

/// Adjusted Rand index between two labelings of the same items.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

// ---------------------------------------------------------------------------

template <typename Visitor>
void for_each_set_partition(int n, int k, Visitor&& visit) {
  if (n < 1 || k < 1 || k > n) return;
  // a[i] <= max(a[0..i-1]) + 1, a[0] = 0; prefix maxima tracked in m.
  std::vector<int> a(static_cast<std::size_t>(n), 0);
  std::vector<int> m(static_cast<std::size_t>(n), 0);
  while (true) {
    if (m[static_cast<std::size_t>(n - 1)] == k - 1) visit(std::as_const(a));
    // Increment the rightmost position that can still grow within k labels.
    int i = n - 1;
    for (; i > 0; --i) {
      const auto iu = static_cast<std::size_t>(i);
      if (a[iu] <= m[iu - 1] && a[iu] < k - 1) break;
    }
    if (i == 0) return;
    const auto iu = static_cast<std::size_t>(i);
    ++a[iu];
    m[iu] = std::max(m[iu - 1], a[iu]);
    for (auto j = iu + 1; j < a.size(); ++j) {
      a[j] = 0;
      m[j] = m[iu];
    }
  }
}

}  // namespace dlem

#endif  // DLEM_SPECTRAL_HPP_
