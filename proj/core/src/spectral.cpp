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

#include "dlem/spectral.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "dlem/error.hpp"

namespace dlem {
namespace {

double off_diagonal_norm(const Matrix& a) {
  double sum = 0.0;
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      if (i != j) sum += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(sum);
}

// Zeroes a(p,q) with one Jacobi rotation, updating both a and the
// accumulated eigenvector matrix v.
void rotate(Matrix& a, Matrix& v, Index p, Index q) {
  const double apq = a(p, q);
  if (apq == 0.0) return;
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::hypot(theta, 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;
  const Index n = a.rows();
  for (Index k = 0; k < n; ++k) {
    if (k == p || k == q) continue;
    const double akp = a(k, p);
    const double akq = a(k, q);
    const double kp = c * akp - s * akq;
    const double kq = s * akp + c * akq;
    a(k, p) = kp;
    a(p, k) = kp;
    a(k, q) = kq;
    a(q, k) = kq;
  }
  a(p, p) -= t * apq;
  a(q, q) += t * apq;
  a(p, q) = 0.0;
  a(q, p) = 0.0;
  for (Index k = 0; k < n; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

}  // namespace

SymmetricEigen jacobi_eigensolver(const Matrix& symmetric, const JacobiOptions& options) {
  const Index n = symmetric.rows();
  if (n < 1 || symmetric.cols() != n) {
    throw InvalidArgument("jacobi_eigensolver needs a nonempty square matrix");
  }
  if (!symmetric.allFinite()) throw InvalidArgument("jacobi_eigensolver: non-finite input");
  const double scale = std::max(1.0, symmetric.cwiseAbs().maxCoeff());
  if ((symmetric - symmetric.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidArgument("jacobi_eigensolver needs a symmetric matrix");
  }
  Matrix a = symmetric;
  Matrix v = Matrix::Identity(n, n);
  SymmetricEigen out;
  double off = off_diagonal_norm(a);
  int sweep = 0;
  while (off >= options.off_diagonal_tolerance) {
    if (sweep == options.max_sweeps) {
      throw ConvergenceError("Jacobi eigensolver did not converge in " +
                                 std::to_string(options.max_sweeps) +
                                 " sweeps; off-diagonal norm " + std::to_string(off),
                             off);
    }
    for (Index p = 0; p + 1 < n; ++p) {
      for (Index q = p + 1; q < n; ++q) rotate(a, v, p, q);
    }
    ++sweep;
    off = off_diagonal_norm(a);
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index x, Index y) { return a(x, x) < a(y, y); });
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Index j = 0; j < n; ++j) {
    const Index src = order[static_cast<std::size_t>(j)];
    out.eigenvalues(j) = a(src, src);
    out.eigenvectors.col(j) = v.col(src);
  }
  out.sweeps = sweep;
  out.off_diagonal_norm = off;
  return out;
}

EigenmapResult generalized_eigenmaps(const WeightedGraph& g, int k,
                                     const JacobiOptions& options) {
  const Index n = g.size();
  if (k < 1 || k > n) {
    throw InvalidArgument("eigenmap dimension k=" + std::to_string(k) + " must lie in 1.." +
                          std::to_string(n));
  }
  const Vector inv_sqrt_deg = g.degrees().cwiseSqrt().cwiseInverse();
  const Matrix l = g.laplacian();
  // D^-1/2 L D^-1/2, filled from the upper triangle so it is exactly symmetric.
  Matrix m(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i <= j; ++i) {
      const double value = l(i, j) * inv_sqrt_deg(i) * inv_sqrt_deg(j);
      m(i, j) = value;
      m(j, i) = value;
    }
  }
  const SymmetricEigen eig = jacobi_eigensolver(m, options);

  EigenmapResult out;
  out.eigenvalues = eig.eigenvalues.head(k);
  out.embedding = inv_sqrt_deg.asDiagonal() * eig.eigenvectors.leftCols(k);
  for (Index c = 0; c < k; ++c) {
    Index arg = 0;
    out.embedding.col(c).cwiseAbs().maxCoeff(&arg);
    if (out.embedding(arg, c) < 0.0) out.embedding.col(c) *= -1.0;
  }
  const Matrix residual =
      l * out.embedding -
      g.degrees().asDiagonal() * out.embedding * out.eigenvalues.asDiagonal();
  out.residual = residual.cwiseAbs().maxCoeff();
  return out;
}

double trace_objective(const WeightedGraph& g, const Matrix& z) {
  if (z.rows() != g.size()) {
    throw InvalidArgument("trace_objective: embedding has " + std::to_string(z.rows()) +
                          " rows, graph has " + std::to_string(g.size()) + " vertices");
  }
  return (z.transpose() * g.laplacian() * z).trace();
}

OptimalPartition brute_force_optimal_partition(const WeightedGraph& g, int k) {
  const Index n = g.size();
  if (n > 12 || k > 3) {
    throw InvalidArgument("brute-force partition search is limited to n <= 12, k <= 3");
  }
  if (k < 1 || k > n) throw InvalidArgument("cluster count must lie in 1..n");

  // Tr(Z^T L Z) = sum_k cut(C_k) / Vol(C_k) for volume-scaled indicators.
  const Matrix& s = g.similarity();
  const Vector& d = g.degrees();
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_labels;
  std::vector<double> vol(static_cast<std::size_t>(k));
  std::vector<double> cut(static_cast<std::size_t>(k));
  for_each_set_partition(static_cast<int>(n), k, [&](const std::vector<int>& labels) {
    std::fill(vol.begin(), vol.end(), 0.0);
    std::fill(cut.begin(), cut.end(), 0.0);
    for (Index i = 0; i < n; ++i) {
      const auto ci = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
      vol[ci] += d(i);
      for (Index j = 0; j < n; ++j) {
        if (labels[static_cast<std::size_t>(j)] != labels[static_cast<std::size_t>(i)]) {
          cut[ci] += s(i, j);
        }
      }
    }
    double objective = 0.0;
    for (std::size_t c = 0; c < vol.size(); ++c) objective += cut[c] / vol[c];
    if (objective < best) {
      best = objective;
      best_labels = labels;
    }
  });
  Partition p(std::move(best_labels), k);
  // Report the objective through the same quadratic form callers compare against.
  const double objective = partition_cut_objective(g, p);
  return {std::move(p), objective};
}

std::vector<int> sign_split(const Vector& v) {
  std::vector<int> labels(static_cast<std::size_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) labels[static_cast<std::size_t>(i)] = v(i) >= 0.0 ? 1 : 0;
  return labels;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw InvalidArgument("ARI: labelings differ in length");
  if (a.empty()) throw InvalidArgument("ARI: empty labelings");
  const int ka = *std::max_element(a.begin(), a.end()) + 1;
  const int kb = *std::max_element(b.begin(), b.end()) + 1;
  if (*std::min_element(a.begin(), a.end()) < 0 || *std::min_element(b.begin(), b.end()) < 0) {
    throw InvalidArgument("ARI: labels must be nonnegative");
  }
  Matrix table = Matrix::Zero(ka, kb);
  for (std::size_t i = 0; i < a.size(); ++i) table(a[i], b[i]) += 1.0;
  auto pairs = [](double x) { return 0.5 * x * (x - 1.0); };
  double sum_cells = 0.0;
  for (Index i = 0; i < ka; ++i) {
    for (Index j = 0; j < kb; ++j) sum_cells += pairs(table(i, j));
  }
  double sum_rows = 0.0;
  for (Index i = 0; i < ka; ++i) sum_rows += pairs(table.row(i).sum());
  double sum_cols = 0.0;
  for (Index j = 0; j < kb; ++j) sum_cols += pairs(table.col(j).sum());
  const double total = pairs(static_cast<double>(a.size()));
  const double expected = sum_rows * sum_cols / total;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;  // both labelings trivial
  return (sum_cells - expected) / (max_index - expected);
}

}  // namespace dlem
