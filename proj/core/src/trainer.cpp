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

#include "dlem/trainer.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include "dlem/csv.hpp"
#include "dlem/error.hpp"
#include "dlem/mixup.hpp"

namespace dlem {

void TrainConfig::validate(const MlpEncoder* enc) const {
  if (epochs < 1) throw ConfigError("epochs", "must be >= 1");
  if (batch_size < 2) throw ConfigError("batch_size", "must be >= 2");
  if (!(lr0 > 0.0) || !std::isfinite(lr0)) throw ConfigError("lr0", "must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum", "must lie in [0, 1)");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    throw ConfigError("weight_decay", "must be >= 0");
  }
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma", "must be >= 0");
  if (gamma == 0.0 && !ablation) {
    throw ConfigError("gamma", "must be positive unless ablation mode is enabled");
  }
  if (mixup.enabled) {
    if (!(mixup.alpha > 0.0) || !std::isfinite(mixup.alpha)) {
      throw ConfigError("mixup.alpha", "must be positive");
    }
    if (mixup.eligible_layers.empty()) {
      throw ConfigError("mixup.eligible_layers", "must not be empty");
    }
    for (int l : mixup.eligible_layers) {
      const int limit = enc != nullptr ? enc->layer_count() : l + 1;
      if (l < 0 || l >= limit) {
        throw ConfigError("mixup.eligible_layers",
                          "layer " + std::to_string(l) + " is not a valid split point");
      }
    }
  }
  if (augmentation) {
    try {
      augmentation->validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError("augmentation", e.what());
    }
  }
}

CollapseMetrics collapse_metrics(const Matrix& z) {
  if (z.rows() < 2) throw InvalidArgument("collapse metrics need at least 2 rows");
  CollapseMetrics m;
  const Eigen::BDCSVD<Matrix> svd(z);
  const Vector& sv = svd.singularValues();
  const double top = sv.size() > 0 ? sv(0) : 0.0;
  if (top > 0.0) {
    m.effective_rank = static_cast<double>((sv.array() > 0.01 * top).count());
  }
  const Eigen::RowVectorXd mean = z.colwise().mean();
  const Eigen::RowVectorXd std_dev =
      (z.rowwise() - mean).cwiseAbs2().colwise().mean().cwiseSqrt();
  m.min_dim_std = std_dev.minCoeff();
  m.mean_dim_std = std_dev.mean();
  return m;
}

void TrainReport::write_csv(std::ostream& out) const {
  out << "epoch,trace_term,decorrelation_term,total,learning_rate,effective_rank,"
         "min_dim_std,mean_dim_std\n";
  for (const EpochRecord& r : epochs) {
    out << r.epoch << ',' << csv::format_double(r.trace_term) << ','
        << csv::format_double(r.decorrelation_term) << ',' << csv::format_double(r.total) << ','
        << csv::format_double(r.learning_rate) << ','
        << csv::format_double(r.embedding.effective_rank) << ','
        << csv::format_double(r.embedding.min_dim_std) << ','
        << csv::format_double(r.embedding.mean_dim_std) << '\n';
  }
}

double cosine_lr(double lr0, std::size_t step, std::size_t total_steps) {
  if (total_steps < 1) throw InvalidArgument("cosine schedule needs at least one step");
  if (step > total_steps) throw InvalidArgument("step beyond the end of the schedule");
  if (step == total_steps) return 0.0;
  const double progress = static_cast<double>(step) / static_cast<double>(total_steps);
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void sgd_step(Eigen::Ref<Matrix> param, const Eigen::Ref<const Matrix>& grad,
              Eigen::Ref<Matrix> velocity, double lr, double momentum, double weight_decay) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols() ||
      param.rows() != velocity.rows() || param.cols() != velocity.cols()) {
    throw InvalidArgument("sgd_step: parameter, gradient and velocity shapes differ");
  }
  velocity = momentum * velocity + grad + weight_decay * param;
  param -= lr * velocity;
}

SgdMomentum::SgdMomentum(const MlpEncoder& enc)
    : velocity_(EncoderGradients::zeros_like(enc)) {}

void SgdMomentum::step(MlpEncoder& enc, const EncoderGradients& grads, double lr,
                       double momentum, double weight_decay) {
  if (grads.weights.size() != velocity_.weights.size()) {
    throw InvalidArgument("gradient layout does not match the optimizer state");
  }
  auto layers = enc.mutable_layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    sgd_step(layers[i].weights, grads.weights[i], velocity_.weights[i], lr, momentum,
             weight_decay);
    sgd_step(layers[i].bias, grads.biases[i], velocity_.biases[i], lr, momentum, 0.0);
  }
}

TrainReport train(MlpEncoder& enc, const UnlabeledFeatures& data, const TrainConfig& cfg) {
  cfg.validate(&enc);
  if (data.dim() != enc.input_dim()) {
    throw InvalidArgument("training data has " + std::to_string(data.dim()) +
                          " features, encoder expects " + std::to_string(enc.input_dim()));
  }
  if (data.size() < cfg.batch_size) {
    throw InvalidArgument("dataset of " + std::to_string(data.size()) +
                          " rows is smaller than one batch of " +
                          std::to_string(cfg.batch_size));
  }
  const AugmentationPolicy policy = cfg.augmentation.value_or(default_policy(data.features()));
  PairedBatchStream stream(data, policy, cfg.batch_size, derive_seed(cfg.seed, 1));
  Rng mix_rng(derive_seed(cfg.seed, 2));
  SgdMomentum optimizer(enc);
  const GammaMode mode = cfg.ablation ? GammaMode::kAblation : GammaMode::kStrict;

  const auto per_epoch = static_cast<std::size_t>(stream.batches_per_epoch());
  const std::size_t total_steps = per_epoch * static_cast<std::size_t>(cfg.epochs);
  TrainReport report;
  std::size_t step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochRecord record;
    record.epoch = epoch;
    for (const PairedBatch& batch : stream.next_epoch()) {
      std::optional<MixPlan> plan;
      if (cfg.mixup.enabled) {
        plan = sample_mix_plan(cfg.mixup.alpha, cfg.mixup.eligible_layers, batch.x.rows(),
                               mix_rng);
      }
      const StepResult result = step_gradients(enc, batch.x, batch.x_pos, plan, cfg.gamma, mode);
      if (!std::isfinite(result.loss.total)) {
        throw DivergenceError("non-finite loss at step " + std::to_string(step), step);
      }
      const double lr = cosine_lr(cfg.lr0, step, total_steps);
      optimizer.step(enc, result.grads, lr, cfg.momentum, cfg.weight_decay);
      record.trace_term += result.loss.trace_term;
      record.decorrelation_term += result.loss.decorrelation_term;
      record.total += result.loss.total;
      record.learning_rate = lr;
      ++step;
    }
    const auto n = static_cast<double>(per_epoch);
    record.trace_term /= n;
    record.decorrelation_term /= n;
    record.total /= n;
    record.embedding = collapse_metrics(forward(enc, data.features()));
    report.epochs.push_back(record);
  }
  report.steps = step;
  return report;
}

}  // namespace dlem
