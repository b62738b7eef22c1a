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

#include "dlem_cli/run_config.hpp"

#include <string>
#include <utility>

#include "dlem/error.hpp"

namespace dlem::cli {
namespace {

void flatten_into(const Json& node, const std::string& prefix, Json& out) {
  for (const auto& [key, value] : node.items()) {
    const std::string name = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) {
      flatten_into(value, name, out);
    } else {
      out[name] = value;
    }
  }
}

// Typed accessors over the merged flat config; every failure names its key.
class Reader {
 public:
  explicit Reader(const Json& flat) : flat_(flat) {}

  double number(const std::string& key) const {
    const Json& v = at(key);
    if (!v.is_number()) throw ConfigError(key, "expected a number");
    return v.get<double>();
  }
  long long integer(const std::string& key) const {
    const Json& v = at(key);
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d == static_cast<double>(static_cast<long long>(d))) return static_cast<long long>(d);
    }
    throw ConfigError(key, "expected an integer");
  }
  int small_int(const std::string& key) const {
    const long long v = integer(key);
    if (v < -1'000'000'000LL || v > 1'000'000'000LL) throw ConfigError(key, "value out of range");
    return static_cast<int>(v);
  }
  bool boolean(const std::string& key) const {
    const Json& v = at(key);
    if (!v.is_boolean()) throw ConfigError(key, "expected true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& key) const {
    const Json& v = at(key);
    if (!v.is_string()) throw ConfigError(key, "expected a string");
    return v.get<std::string>();
  }
  std::vector<int> int_list(const std::string& key) const {
    const Json& v = at(key);
    if (!v.is_array()) throw ConfigError(key, "expected an array of integers");
    std::vector<int> out;
    for (const Json& e : v) {
      if (!e.is_number_integer()) throw ConfigError(key, "expected an array of integers");
      out.push_back(e.get<int>());
    }
    return out;
  }

 private:
  const Json& at(const std::string& key) const { return flat_.at(key); }
  const Json& flat_;
};

}  // namespace

std::vector<int> EncoderSpec::dims(int input_dim) const {
  std::vector<int> d = {input_dim};
  d.insert(d.end(), hidden.begin(), hidden.end());
  d.push_back(output_dim);
  return d;
}

EncoderOptions EncoderSpec::options() const {
  EncoderOptions o;
  o.hidden_standardize = hidden_standardize;
  o.hidden_rectify = hidden_rectify;
  o.final_standardize = final_standardize;
  return o;
}

Json default_train_config() {
  const TrainRun d;
  Json j = resolved_config(d);
  // The default policy depends on the data, so its numbers are placeholders
  // until resolve_augmentation() runs.
  j["augmentation.mode"] = "default";
  return j;
}

Json flatten(const Json& config) {
  if (!config.is_object()) throw ConfigError("config", "top level must be a JSON object");
  Json out = Json::object();
  flatten_into(config, "", out);
  return out;
}

TrainRun parse_train_config(const Json& config) {
  Json merged = default_train_config();
  const Json user = flatten(config);
  for (const auto& [key, value] : user.items()) {
    if (!merged.contains(key)) throw ConfigError(key, "unknown configuration key");
    merged[key] = value;
  }
  const Reader r(merged);

  TrainRun run;
  const long long seed = r.integer("seed");
  if (seed < 0) throw ConfigError("seed", "must be nonnegative");
  run.seed = static_cast<std::uint64_t>(seed);

  run.data.path = r.string("data.path");
  run.data.has_labels = r.boolean("data.has_labels");
  run.data.generator = r.string("data.generator");
  if (run.data.generator != "blobs" && run.data.generator != "moons" &&
      run.data.generator != "rings") {
    throw ConfigError("data.generator", "must be one of blobs, moons, rings");
  }
  run.data.classes = r.small_int("data.classes");
  run.data.per_class = r.small_int("data.per_class");
  run.data.dim = r.small_int("data.dim");
  run.data.separation = r.number("data.separation");
  run.data.noise = r.number("data.noise");
  if (run.data.path.empty()) {
    if (run.data.classes < 2) throw ConfigError("data.classes", "must be >= 2");
    if (run.data.per_class < 1) throw ConfigError("data.per_class", "must be >= 1");
    if (run.data.dim < 1) throw ConfigError("data.dim", "must be >= 1");
    if (run.data.generator == "blobs" && run.data.classes > run.data.dim) {
      throw ConfigError("data.classes", "blobs need data.dim >= data.classes");
    }
    if (!(run.data.noise >= 0.0)) throw ConfigError("data.noise", "must be >= 0");
  }

  run.encoder.hidden = r.int_list("encoder.hidden");
  for (int w : run.encoder.hidden) {
    if (w < 1) throw ConfigError("encoder.hidden", "widths must be positive");
  }
  run.encoder.output_dim = r.small_int("encoder.output_dim");
  if (run.encoder.output_dim < 1) throw ConfigError("encoder.output_dim", "must be positive");
  run.encoder.hidden_standardize = r.boolean("encoder.hidden_standardize");
  run.encoder.hidden_rectify = r.boolean("encoder.hidden_rectify");
  run.encoder.final_standardize = r.boolean("encoder.final_standardize");

  TrainConfig& t = run.train;
  t.epochs = r.small_int("epochs");
  t.batch_size = r.small_int("batch_size");
  t.lr0 = r.number("lr0");
  t.momentum = r.number("momentum");
  t.weight_decay = r.number("weight_decay");
  t.gamma = r.number("gamma");
  t.ablation = r.boolean("ablation");
  t.mixup.enabled = r.boolean("mixup.enabled");
  t.mixup.alpha = r.number("mixup.alpha");
  t.mixup.eligible_layers = r.int_list("mixup.eligible_layers");
  t.seed = run.seed;

  const std::string mode = r.string("augmentation.mode");
  if (mode == "custom") {
    run.custom_augmentation = true;
    AugmentationPolicy p;
    p.noise_sigma = r.number("augmentation.noise_sigma");
    p.scale_lo = r.number("augmentation.scale_lo");
    p.scale_hi = r.number("augmentation.scale_hi");
    p.mask_prob = r.number("augmentation.mask_prob");
    t.augmentation = p;
  } else if (mode == "default") {
    for (const char* key : {"augmentation.noise_sigma", "augmentation.scale_lo",
                            "augmentation.scale_hi", "augmentation.mask_prob"}) {
      if (user.contains(key)) {
        throw ConfigError(key, "only used when augmentation.mode is \"custom\"");
      }
    }
  } else {
    throw ConfigError("augmentation.mode", "must be \"default\" or \"custom\"");
  }

  t.validate();
  return run;
}

Json resolved_config(const TrainRun& run) {
  Json j = Json::object();
  j["seed"] = run.seed;
  j["data.path"] = run.data.path;
  j["data.has_labels"] = run.data.has_labels;
  j["data.generator"] = run.data.generator;
  j["data.classes"] = run.data.classes;
  j["data.per_class"] = run.data.per_class;
  j["data.dim"] = run.data.dim;
  j["data.separation"] = run.data.separation;
  j["data.noise"] = run.data.noise;
  j["encoder.hidden"] = run.encoder.hidden;
  j["encoder.output_dim"] = run.encoder.output_dim;
  j["encoder.hidden_standardize"] = run.encoder.hidden_standardize;
  j["encoder.hidden_rectify"] = run.encoder.hidden_rectify;
  j["encoder.final_standardize"] = run.encoder.final_standardize;
  const TrainConfig& t = run.train;
  j["epochs"] = t.epochs;
  j["batch_size"] = t.batch_size;
  j["lr0"] = t.lr0;
  j["momentum"] = t.momentum;
  j["weight_decay"] = t.weight_decay;
  j["gamma"] = t.gamma;
  j["ablation"] = t.ablation;
  j["mixup.enabled"] = t.mixup.enabled;
  j["mixup.alpha"] = t.mixup.alpha;
  j["mixup.eligible_layers"] = t.mixup.eligible_layers;
  const AugmentationPolicy p = t.augmentation.value_or(AugmentationPolicy{});
  j["augmentation.mode"] = t.augmentation ? "custom" : "default";
  j["augmentation.noise_sigma"] = p.noise_sigma;
  j["augmentation.scale_lo"] = p.scale_lo;
  j["augmentation.scale_hi"] = p.scale_hi;
  j["augmentation.mask_prob"] = p.mask_prob;
  return j;
}

void resolve_augmentation(TrainRun& run, const Matrix& features) {
  if (!run.train.augmentation) run.train.augmentation = default_policy(features);
}

Dataset generate_dataset(const DataSpec& spec, std::uint64_t seed) {
  const std::uint64_t s = derive_seed(seed, kDataStream);
  Dataset ds;
  if (spec.generator == "blobs") {
    ds = generate_blobs(spec.classes, spec.per_class, spec.dim, spec.separation, s);
  } else if (spec.generator == "moons") {
    ds = generate_moons(spec.per_class, spec.noise, s);
  } else if (spec.generator == "rings") {
    ds = generate_rings(spec.classes, spec.per_class, spec.noise, s);
  } else {
    throw ConfigError("data.generator", "must be one of blobs, moons, rings");
  }
  if (!spec.has_labels) {
    ds.labels.reset();
    ds.class_count = 0;
  }
  return ds;
}

Dataset load_training_data(const DataSpec& spec, std::uint64_t seed) {
  if (spec.path.empty()) return generate_dataset(spec, seed);
  return load_csv(spec.path, spec.has_labels);
}

}  // namespace dlem::cli
