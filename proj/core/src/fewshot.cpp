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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "dlem/error.hpp"

namespace dlem {
namespace {

void check_labels(std::span<const int> labels, Index rows, int class_count) {
  if (static_cast<Index>(labels.size()) != rows) {
    throw InvalidArgument("label count " + std::to_string(labels.size()) +
                          " does not match " + std::to_string(rows) + " rows");
  }
  for (int y : labels) {
    if (y < 0 || y >= class_count) {
      throw InvalidArgument("label " + std::to_string(y) + " outside [0, " +
                            std::to_string(class_count) + ")");
    }
  }
}

Matrix gather(const Matrix& x, std::span<const Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), x.cols());
  for (Index r = 0; r < out.rows(); ++r) out.row(r) = x.row(rows[static_cast<std::size_t>(r)]);
  return out;
}

// Row-wise softmax of scores, stabilized by the row max.
Matrix softmax(Matrix scores) {
  for (Index r = 0; r < scores.rows(); ++r) {
    scores.row(r).array() -= scores.row(r).maxCoeff();
    scores.row(r) = scores.row(r).array().exp().matrix();
    scores.row(r) /= scores.row(r).sum();
  }
  return scores;
}

double cross_entropy(const Matrix& scores, std::span<const int> labels) {
  double total = 0.0;
  for (Index r = 0; r < scores.rows(); ++r) {
    const double m = scores.row(r).maxCoeff();
    const double lse = m + std::log((scores.row(r).array() - m).exp().sum());
    total += lse - scores(r, labels[static_cast<std::size_t>(r)]);
  }
  return total / static_cast<double>(scores.rows());
}

Matrix scores_of(const Matrix& w, const Vector& b, const Matrix& x) {
  return (x * w.transpose()).rowwise() + b.transpose();
}

// Gradient of the mean cross-entropy with respect to the scores.
Matrix score_gradient(const Matrix& scores, std::span<const int> labels) {
  Matrix g = softmax(scores);
  for (Index r = 0; r < g.rows(); ++r) g(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
  return g / static_cast<double>(g.rows());
}

std::vector<int> argmax_rows(const Matrix& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Index r = 0; r < scores.rows(); ++r) {
    Index c = 0;
    scores.row(r).maxCoeff(&c);
    out[static_cast<std::size_t>(r)] = static_cast<int>(c);
  }
  return out;
}

std::set<int> label_set(std::span<const int> labels) {
  return std::set<int>(labels.begin(), labels.end());
}

}  // namespace

Episode sample_episode(const Matrix& features, std::span<const int> labels, int class_count,
                       int n_way, int k_shot, int q_query, Rng& rng) {
  check_labels(labels, features.rows(), class_count);
  if (n_way < 2) throw InvalidArgument("an episode needs at least 2 classes");
  if (k_shot < 1 || q_query < 1) throw InvalidArgument("k_shot and q_query must be >= 1");
  if (n_way > class_count) {
    throw InvalidArgument(std::to_string(n_way) + "-way episodes need that many classes, got " +
                          std::to_string(class_count));
  }
  std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(class_count));
  for (Index i = 0; i < features.rows(); ++i) {
    by_class[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])].push_back(i);
  }
  std::vector<int> classes(static_cast<std::size_t>(class_count));
  std::iota(classes.begin(), classes.end(), 0);
  std::shuffle(classes.begin(), classes.end(), rng);
  classes.resize(static_cast<std::size_t>(n_way));

  Episode ep;
  ep.n_way = n_way;
  ep.k_shot = k_shot;
  ep.q_query = q_query;
  ep.classes = classes;
  const auto needed = static_cast<std::size_t>(k_shot + q_query);
  std::vector<std::vector<Index>> picks;
  for (int c : classes) {
    std::vector<Index> rows = by_class[static_cast<std::size_t>(c)];
    if (rows.size() < needed) {
      throw InvalidArgument("class " + std::to_string(c) + " has " +
                            std::to_string(rows.size()) + " samples, episode needs " +
                            std::to_string(needed));
    }
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(needed);
    picks.push_back(std::move(rows));
  }
  for (int e = 0; e < n_way; ++e) {
    const auto& rows = picks[static_cast<std::size_t>(e)];
    for (int s = 0; s < k_shot; ++s) {
      ep.support_rows.push_back(rows[static_cast<std::size_t>(s)]);
      ep.support_labels.push_back(e);
    }
  }
  for (int e = 0; e < n_way; ++e) {
    const auto& rows = picks[static_cast<std::size_t>(e)];
    for (std::size_t q = static_cast<std::size_t>(k_shot); q < needed; ++q) {
      ep.query_rows.push_back(rows[q]);
      ep.query_labels.push_back(e);
    }
  }
  ep.support = gather(features, ep.support_rows);
  ep.query = gather(features, ep.query_rows);
  return ep;
}

Episode sample_episode(const Dataset& ds, int n_way, int k_shot, int q_query, Rng& rng) {
  return sample_episode(ds.features, ds.label_vector(), ds.class_count, n_way, k_shot, q_query,
                        rng);
}

Matrix ProbeModel::probabilities(const Matrix& x) const {
  if (x.cols() != weights.cols()) throw InvalidArgument("probe input width mismatch");
  return softmax(scores_of(weights, bias, x));
}

std::vector<int> ProbeModel::predict(const Matrix& x) const {
  if (x.cols() != weights.cols()) throw InvalidArgument("probe input width mismatch");
  return argmax_rows(scores_of(weights, bias, x));
}

double probe_objective(const ProbeModel& model, const Matrix& x, std::span<const int> labels) {
  check_labels(labels, x.rows(), static_cast<int>(model.weights.rows()));
  return cross_entropy(scores_of(model.weights, model.bias, x), labels) +
         0.5 * model.reg_strength * model.weights.squaredNorm();
}

ProbeModel fit_probe(const Matrix& x, std::span<const int> labels, int class_count,
                     const ProbeOptions& options) {
  if (class_count < 2) throw InvalidArgument("probe needs at least 2 classes");
  if (!(options.reg_strength > 0.0)) throw InvalidArgument("reg_strength must be positive");
  if (x.rows() < 1) throw InvalidArgument("probe needs at least one support row");
  if (!x.allFinite()) throw InvalidArgument("probe features must be finite");
  check_labels(labels, x.rows(), class_count);

  ProbeModel model;
  model.weights = Matrix::Zero(class_count, x.cols());
  model.bias = Vector::Zero(class_count);
  model.reg_strength = options.reg_strength;

  auto objective = [&](const Matrix& w, const Vector& b) {
    return cross_entropy(scores_of(w, b, x), labels) + 0.5 * options.reg_strength * w.squaredNorm();
  };
  double f = objective(model.weights, model.bias);
  double step = 1.0;
  for (int it = 0;; ++it) {
    const Matrix gs = score_gradient(scores_of(model.weights, model.bias, x), labels);
    const Matrix gw = gs.transpose() * x + options.reg_strength * model.weights;
    const Vector gb = gs.colwise().sum().transpose();
    model.gradient_norm = std::max(gw.cwiseAbs().maxCoeff(), gb.cwiseAbs().maxCoeff());
    model.iterations = it;
    if (model.gradient_norm < options.tolerance || it >= options.max_iterations) break;

    const double g2 = gw.squaredNorm() + gb.squaredNorm();
    step = std::min(step * 2.0, 1e6);
    Matrix w_next;
    Vector b_next;
    double f_next = f;
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings) {
      w_next = model.weights - step * gw;
      b_next = model.bias - step * gb;
      f_next = objective(w_next, b_next);
      if (f_next <= f - 0.5 * step * g2) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no representable descent step left
    model.weights = std::move(w_next);
    model.bias = std::move(b_next);
    f = f_next;
  }
  return model;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size() || truth.empty()) {
    throw InvalidArgument("accuracy needs equally sized, nonempty label lists");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

std::string FewShotProtocol::name() const {
  return std::to_string(n_way) + "-way-" + std::to_string(k_shot) + "-shot";
}

FewShotResult evaluate_fewshot(const Matrix& embeddings, std::span<const int> labels,
                               int class_count, const FewShotProtocol& protocol,
                               std::uint64_t seed) {
  if (protocol.episodes < 2) {
    throw InvalidArgument("at least 2 episodes are needed for a confidence interval");
  }
  FewShotResult result;
  result.accuracies.resize(static_cast<std::size_t>(protocol.episodes));
  for (int e = 0; e < protocol.episodes; ++e) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(e)));
    const Episode ep = sample_episode(embeddings, labels, class_count, protocol.n_way,
                                      protocol.k_shot, protocol.q_query, rng);
    const ProbeModel probe = fit_probe(ep.support, ep.support_labels, ep.n_way, protocol.probe);
    result.accuracies[static_cast<std::size_t>(e)] =
        accuracy(probe.predict(ep.query), ep.query_labels);
  }
  const auto n = static_cast<double>(protocol.episodes);
  const double mean =
      std::accumulate(result.accuracies.begin(), result.accuracies.end(), 0.0) / n;
  double ss = 0.0;
  for (double a : result.accuracies) ss += (a - mean) * (a - mean);
  result.mean_accuracy = mean;
  result.ci95 = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return result;
}

Matrix embed(const MlpEncoder& enc, const Matrix& features, int blocks) {
  if (blocks < 1 || blocks > enc.layer_count()) {
    throw InvalidArgument("probe point " + std::to_string(blocks) + " outside [1, " +
                          std::to_string(enc.layer_count()) + "]");
  }
  return forward_layers(enc, features, 0, blocks, nullptr);
}

int default_probe_blocks(const MlpEncoder& enc) {
  return std::max(1, enc.layer_count() - 1);
}

FewShotResult evaluate_fewshot(const MlpEncoder& enc, const Dataset& ds,
                               const FewShotProtocol& protocol, std::uint64_t seed,
                               int probe_blocks) {
  return evaluate_fewshot(embed(enc, ds.features, probe_blocks), ds.label_vector(),
                          ds.class_count, protocol, seed);
}

double LinearSchedule::rate_at(int epoch) const {
  double lr = lr0;
  for (int m : milestones) {
    if (epoch >= m) lr *= decay;
  }
  return lr;
}

double linear_evaluation(const Matrix& train_x, std::span<const int> train_labels,
                         const Matrix& test_x, std::span<const int> test_labels,
                         int class_count, const LinearSchedule& schedule) {
  if (class_count < 2) throw InvalidArgument("linear evaluation needs at least 2 classes");
  check_labels(train_labels, train_x.rows(), class_count);
  check_labels(test_labels, test_x.rows(), class_count);
  if (train_x.cols() != test_x.cols()) throw InvalidArgument("train/test width mismatch");
  if (label_set(train_labels) != label_set(test_labels)) {
    throw InvalidArgument("train and test class sets differ");
  }
  if (schedule.epochs < 1 || schedule.batch_size < 1 || !(schedule.lr0 > 0.0)) {
    throw InvalidArgument("invalid linear evaluation schedule");
  }
  if (!train_x.allFinite() || !test_x.allFinite()) {
    throw InvalidArgument("linear evaluation features must be finite");
  }

  Matrix w = Matrix::Zero(class_count, train_x.cols());
  Vector b = Vector::Zero(class_count);
  Matrix vw = Matrix::Zero(w.rows(), w.cols());
  Vector vb = Vector::Zero(b.size());
  Rng rng(derive_seed(schedule.seed, 0x11ea5));
  std::vector<Index> order(static_cast<std::size_t>(train_x.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::vector<int> batch_labels;
  for (int epoch = 0; epoch < schedule.epochs; ++epoch) {
    const double lr = schedule.rate_at(epoch);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(schedule.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(schedule.batch_size));
      const std::span<const Index> rows(order.data() + start, end - start);
      const Matrix xb = gather(train_x, rows);
      batch_labels.clear();
      for (Index r : rows) batch_labels.push_back(train_labels[static_cast<std::size_t>(r)]);
      const Matrix gs = score_gradient(scores_of(w, b, xb), batch_labels);
      vw = schedule.momentum * vw + gs.transpose() * xb + schedule.weight_decay * w;
      vb = schedule.momentum * vb + gs.colwise().sum().transpose();
      w -= lr * vw;
      b -= lr * vb;
    }
  }
  if (!w.allFinite()) throw DivergenceError("linear classifier diverged", 0);
  return accuracy(argmax_rows(scores_of(w, b, test_x)), test_labels);
}

double linear_evaluation(const MlpEncoder& enc, const Dataset& train, const Dataset& test,
                         const LinearSchedule& schedule, int probe_blocks) {
  if (train.class_count != test.class_count) {
    throw InvalidArgument("train and test class counts differ");
  }
  return linear_evaluation(embed(enc, train.features, probe_blocks), train.label_vector(),
                           embed(enc, test.features, probe_blocks), test.label_vector(),
                           train.class_count, schedule);
}

}  // namespace dlem
