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

#include "dlem_cli/verify.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "dlem/encoder.hpp"
#include "dlem/graph.hpp"
#include "dlem/loss.hpp"
#include "dlem/mixup.hpp"
#include "dlem/spectral.hpp"

namespace dlem::cli {
namespace {

// Dense random graph; a ring of positive edges keeps every degree positive.
WeightedGraph random_graph(int n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix s = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double w = u(rng) < 0.3 ? 0.0 : u(rng);
      s(i, j) = w;
      s(j, i) = w;
    }
  }
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    if (i == j) continue;
    s(i, j) = s(j, i) = std::max(s(i, j), 0.05 + u(rng));
  }
  return WeightedGraph(std::move(s));
}

Matrix normal_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

IdentityCheck check(std::string name, double tolerance) {
  IdentityCheck c;
  c.name = std::move(name);
  c.tolerance = tolerance;
  return c;
}

void record(IdentityCheck& c, double violation) {
  ++c.cases;
  c.worst = std::max(c.worst, std::isfinite(violation) ? violation : INFINITY);
}

void finish(IdentityCheck& c) { c.passed = c.cases > 0 && c.worst <= c.tolerance; }

IdentityCheck cut_identity(Rng& rng) {
  IdentityCheck c = check("cut-identity", 1e-10);
  for (int g = 0; g < 40; ++g) {
    const int n = 3 + static_cast<int>(rng() % 6);
    const int k = 2 + static_cast<int>(rng() % 2);
    const WeightedGraph graph = random_graph(n, rng);
    for_each_set_partition(n, k, [&](const std::vector<int>& labels) {
      const Partition p(labels, k);
      double leave = 0.0;
      for (int q = 0; q < k; ++q) {
        leave += subset_transition_probability(graph, p.members(q), p.complement(q));
      }
      record(c, std::abs(partition_cut_objective(graph, p) - leave));
    });
  }
  finish(c);
  return c;
}

IdentityCheck indicator_orthonormality(Rng& rng) {
  IdentityCheck c = check("indicator-orthonormality", 1e-12);
  for (int g = 0; g < 40; ++g) {
    const int n = 3 + static_cast<int>(rng() % 8);
    const int k = 2 + static_cast<int>(rng() % 2);
    const WeightedGraph graph = random_graph(n, rng);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i < k ? i : static_cast<int>(rng() % k);
    const Matrix z = indicator_matrix(graph, Partition(labels, k));
    const Matrix gram = z.transpose() * graph.degrees().asDiagonal() * z;
    record(c, (gram - Matrix::Identity(k, k)).cwiseAbs().maxCoeff());
  }
  finish(c);
  return c;
}

IdentityCheck stationarity(Rng& rng) {
  IdentityCheck c = check("stationary-distribution", 1e-12);
  for (int g = 0; g < 40; ++g) {
    const WeightedGraph graph = random_graph(2 + static_cast<int>(rng() % 20), rng);
    const Vector pi = stationary_distribution(graph);
    const Vector moved = random_walk_matrix(graph).transpose() * pi;
    record(c, (moved - pi).cwiseAbs().maxCoeff());
  }
  finish(c);
  return c;
}

IdentityCheck eigen_residual(Rng& rng) {
  IdentityCheck c = check("generalized-eigen-residual", 1e-9);
  for (int g = 0; g < 20; ++g) {
    const int n = 2 + static_cast<int>(rng() % 30);
    const WeightedGraph graph = random_graph(n, rng);
    const int k = 1 + static_cast<int>(rng() % static_cast<unsigned>(n));
    const EigenmapResult r = generalized_eigenmaps(graph, k);
    const Matrix gram = r.embedding.transpose() * graph.degrees().asDiagonal() * r.embedding;
    record(c, std::max(r.residual, (gram - Matrix::Identity(k, k)).cwiseAbs().maxCoeff()));
  }
  finish(c);
  return c;
}

IdentityCheck relaxation_bound(Rng& rng) {
  IdentityCheck c = check("relaxation-bound", 1e-9);
  for (int g = 0; g < 20; ++g) {
    const WeightedGraph graph = random_graph(3 + static_cast<int>(rng() % 8), rng);
    const double relaxed = generalized_eigenmaps(graph, 2).eigenvalues.sum();
    const double discrete = brute_force_optimal_partition(graph, 2).objective;
    record(c, std::max(0.0, relaxed - discrete));
  }
  finish(c);
  return c;
}

IdentityCheck frobenius(Rng& rng) {
  IdentityCheck c = check("frobenius-identity", 1e-10);
  for (int t = 0; t < 100; ++t) {
    const Matrix z = normal_matrix(2 + static_cast<Index>(rng() % 15),
                                   1 + static_cast<Index>(rng() % 16), rng);
    record(c, frobenius_identity_gap(z));
  }
  finish(c);
  return c;
}

double step_loss(const MlpEncoder& enc, const Matrix& x, const Matrix& x_pos,
                 const std::optional<MixPlan>& plan, double gamma) {
  if (!plan) return total_loss(forward(enc, x), forward(enc, x_pos), gamma).total;
  const MixedTargets t = mixed_step_targets(enc, x, x_pos, *plan);
  return total_loss(t.z_mix, t.z_pos_mix, t.z, gamma).total;
}

// Richardson-extrapolated central difference, O(h^4).
template <typename F>
Matrix extrapolated_gradient(F&& f, const Matrix& at, double h) {
  auto central = [&](double step) {
    Matrix g(at.rows(), at.cols());
    Matrix probe = at;
    for (Index i = 0; i < at.size(); ++i) {
      const double orig = probe.data()[i];
      probe.data()[i] = orig + step;
      const double up = f(probe);
      probe.data()[i] = orig - step;
      const double down = f(probe);
      probe.data()[i] = orig;
      g.data()[i] = (up - down) / (2.0 * step);
    }
    return g;
  };
  return (4.0 * central(0.5 * h) - central(h)) / 3.0;
}

double relative_error(const Matrix& analytic, const Matrix& reference) {
  const double scale = std::max(reference.cwiseAbs().maxCoeff(), 1e-12);
  return (analytic - reference).cwiseAbs().maxCoeff() / scale;
}

IdentityCheck step_gradients_check(Rng& rng) {
  IdentityCheck c = check("step-gradients", 1e-5);
  const std::vector<int> dims = {4, 6, 6, 3};
  for (int t = 0; t < 6; ++t) {
    const MlpEncoder enc = init_encoder(dims, rng());
    const Index b = 4 + static_cast<Index>(t % 3);
    const Matrix x = normal_matrix(b, dims.front(), rng);
    const Matrix x_pos = x + 0.3 * normal_matrix(b, dims.front(), rng);
    std::optional<MixPlan> plan;
    if (t % 3 != 0) plan = sample_mix_plan(2.0, std::vector<int>{0, 1, 2}, b, rng);
    const double gamma = 0.05;
    const StepResult r = step_gradients(enc, x, x_pos, plan, gamma);
    for (int l = 0; l < enc.layer_count(); ++l) {
      const auto lu = static_cast<std::size_t>(l);
      auto f = [&](const Matrix& w) {
        MlpEncoder e = enc;
        e.mutable_layers()[lu].weights = w;
        return step_loss(e, x, x_pos, plan, gamma);
      };
      record(c, relative_error(r.grads.weights[lu],
                               extrapolated_gradient(f, enc.layer(l).weights, 1e-4)));
    }
  }
  finish(c);
  return c;
}

}  // namespace

std::vector<IdentityCheck> run_identity_suites(std::uint64_t seed) {
  using Suite = IdentityCheck (*)(Rng&);
  const std::pair<const char*, Suite> suites[] = {
      {"cut-identity", cut_identity},
      {"indicator-orthonormality", indicator_orthonormality},
      {"stationary-distribution", stationarity},
      {"generalized-eigen-residual", eigen_residual},
      {"relaxation-bound", relaxation_bound},
      {"frobenius-identity", frobenius},
      {"step-gradients", step_gradients_check},
  };
  Rng rng(seed);
  std::vector<IdentityCheck> out;
  for (const auto& [name, suite] : suites) {
    try {
      out.push_back(suite(rng));
    } catch (const std::exception&) {
      // A suite that throws counts as failed.
      IdentityCheck c = check(name, 0.0);
      c.worst = INFINITY;
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace dlem::cli
