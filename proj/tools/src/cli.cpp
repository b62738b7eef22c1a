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

#include "dlem_cli/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dlem/checkpoint.hpp"
#include "dlem/csv.hpp"
#include "dlem/data.hpp"
#include "dlem/error.hpp"
#include "dlem/fewshot.hpp"
#include "dlem/graph.hpp"
#include "dlem/graph_io.hpp"
#include "dlem/spectral.hpp"
#include "dlem/trainer.hpp"
#include "dlem_cli/manifest.hpp"
#include "dlem_cli/run_config.hpp"
#include "dlem_cli/verify.hpp"

namespace dlem::cli {
namespace {

namespace fs = std::filesystem;

struct TrainArgs {
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

struct FewShotArgs {
  std::string checkpoint;
  std::string data;
  std::string out_dir;
  std::string probe_point = "penultimate";
  FewShotProtocol protocol;
  std::uint64_t seed = 0;
};

struct LinearArgs {
  std::string checkpoint;
  std::string train;
  std::string test;
  std::string out_dir;
  std::string probe_point = "penultimate";
  LinearSchedule schedule;
};

struct OracleArgs {
  std::string graph;
  std::string data;
  bool has_labels = true;
  std::string bandwidth = "knn";
  int k = 2;
  std::string out_dir;
};

struct GenDataArgs {
  DataSpec spec;
  std::uint64_t seed = 0;
  bool no_labels = false;
  std::string out;
};

class UsageError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

void require_file(const std::string& path, const std::string& flag) {
  if (!fs::is_regular_file(path)) throw UsageError(flag + ": no such file '" + path + "'");
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

// "penultimate", "output" or a block count.
int probe_blocks(const MlpEncoder& enc, const std::string& point) {
  if (point == "penultimate") return default_probe_blocks(enc);
  if (point == "output") return enc.layer_count();
  int blocks = 0;
  const auto [ptr, ec] = std::from_chars(point.data(), point.data() + point.size(), blocks);
  if (ec != std::errc() || ptr != point.data() + point.size() || blocks < 1 ||
      blocks > enc.layer_count()) {
    throw UsageError("--probe-point must be penultimate, output or a block count in 1.." +
                     std::to_string(enc.layer_count()));
  }
  return blocks;
}

Dataset load_labeled(const std::string& path, const std::string& flag) {
  require_file(path, flag);
  Dataset ds = load_csv(path, true);
  ds.validate();
  return ds;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  Json config = read_json(a.config);
  if (a.seed) {
    if (!config.is_object()) throw ConfigError("config", "top level must be a JSON object");
    config["seed"] = *a.seed;
  }
  TrainRun run = parse_train_config(config);
  if (!run.data.path.empty()) require_file(run.data.path, "data.path");
  const Dataset ds = load_training_data(run.data, run.seed);
  resolve_augmentation(run, ds.features);
  MlpEncoder enc = init_encoder(run.encoder.dims(static_cast<int>(ds.dim())),
                                derive_seed(run.seed, kEncoderInitStream), run.encoder.options());
  run.train.validate(&enc);

  const TrainReport report = train(enc, ds.unlabeled(), run.train);

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  const fs::path checkpoint = dir / "encoder.dlem";
  const fs::path report_path = dir / "train_report.csv";
  save_checkpoint(enc, checkpoint);
  {
    std::ofstream csv(report_path);
    if (!csv) throw Error("cannot write " + report_path.string());
    report.write_csv(csv);
  }
  RunManifest m;
  m.subcommand = "train";
  m.config = resolved_config(run);
  m.seed = run.seed;
  m.inputs.emplace_back("config", a.config);
  if (!run.data.path.empty()) m.inputs.emplace_back("data", run.data.path);
  m.outputs.emplace_back("checkpoint", checkpoint);
  m.outputs.emplace_back("train_report", report_path);
  m.write(dir / "manifest.json");

  const EpochRecord& last = report.epochs.back();
  out << "trained " << report.epochs.size() << " epochs (" << report.steps
      << " steps): total " << last.total << ", trace " << last.trace_term << ", decorrelation "
      << last.decorrelation_term << ", effective rank " << last.embedding.effective_rank << '\n'
      << "wrote " << checkpoint.string() << '\n';
  return kExitOk;
}

int cmd_eval_fewshot(const FewShotArgs& a, std::ostream& out) {
  if (a.protocol.episodes < 2) throw UsageError("--episodes must be at least 2");
  require_file(a.checkpoint, "--checkpoint");
  const MlpEncoder enc = load_checkpoint(a.checkpoint);
  const Dataset ds = load_labeled(a.data, "--data");
  if (ds.dim() != enc.input_dim()) {
    throw UsageError("--data has " + std::to_string(ds.dim()) + " features, checkpoint expects " +
                     std::to_string(enc.input_dim()));
  }
  const int blocks = probe_blocks(enc, a.probe_point);
  const FewShotResult r = evaluate_fewshot(enc, ds, a.protocol, a.seed, blocks);

  Json j = Json::object();
  j["protocol"] = a.protocol.name();
  j["episodes"] = a.protocol.episodes;
  j["mean_accuracy"] = r.mean_accuracy;
  j["ci95"] = r.ci95;
  j["seed"] = a.seed;
  j["checkpoint_path"] = a.checkpoint;
  j["probe_blocks"] = blocks;

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  write_text(dir / "fewshot.json", j.dump(2) + "\n");
  write_text(dir / "fewshot.csv",
             "protocol,episodes,mean_accuracy,ci95,seed,checkpoint_path\n" + a.protocol.name() +
                 "," + std::to_string(a.protocol.episodes) + "," +
                 csv::format_double(r.mean_accuracy) + "," + csv::format_double(r.ci95) + "," +
                 std::to_string(a.seed) + "," + a.checkpoint + "\n");
  RunManifest m;
  m.subcommand = "eval-fewshot";
  m.seed = a.seed;
  m.config = {{"n_way", a.protocol.n_way},
              {"k_shot", a.protocol.k_shot},
              {"q_query", a.protocol.q_query},
              {"episodes", a.protocol.episodes},
              {"probe.reg_strength", a.protocol.probe.reg_strength},
              {"probe.tolerance", a.protocol.probe.tolerance},
              {"probe.max_iterations", a.protocol.probe.max_iterations},
              {"probe.point", a.probe_point},
              {"probe.blocks", blocks}};
  m.inputs.emplace_back("checkpoint", a.checkpoint);
  m.inputs.emplace_back("data", a.data);
  m.outputs.emplace_back("result_json", dir / "fewshot.json");
  m.outputs.emplace_back("result_csv", dir / "fewshot.csv");
  m.write(dir / "manifest.json");

  out << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_eval_linear(const LinearArgs& a, std::ostream& out) {
  require_file(a.checkpoint, "--checkpoint");
  const MlpEncoder enc = load_checkpoint(a.checkpoint);
  const Dataset train_ds = load_labeled(a.train, "--train");
  const Dataset test_ds = load_labeled(a.test, "--test");
  const int blocks = probe_blocks(enc, a.probe_point);
  const double acc = linear_evaluation(enc, train_ds, test_ds, a.schedule, blocks);

  Json j = Json::object();
  j["protocol"] = "linear";
  j["epochs"] = a.schedule.epochs;
  j["accuracy"] = acc;
  j["seed"] = a.schedule.seed;
  j["checkpoint_path"] = a.checkpoint;
  j["probe_blocks"] = blocks;

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  write_text(dir / "linear.json", j.dump(2) + "\n");
  write_text(dir / "linear.csv", "protocol,epochs,accuracy,seed,checkpoint_path\nlinear," +
                                     std::to_string(a.schedule.epochs) + "," +
                                     csv::format_double(acc) + "," +
                                     std::to_string(a.schedule.seed) + "," + a.checkpoint + "\n");
  RunManifest m;
  m.subcommand = "eval-linear";
  m.seed = a.schedule.seed;
  m.config = {{"epochs", a.schedule.epochs},
              {"lr0", a.schedule.lr0},
              {"milestones", a.schedule.milestones},
              {"decay", a.schedule.decay},
              {"batch_size", a.schedule.batch_size},
              {"momentum", a.schedule.momentum},
              {"weight_decay", a.schedule.weight_decay},
              {"probe.point", a.probe_point},
              {"probe.blocks", blocks}};
  m.inputs.emplace_back("checkpoint", a.checkpoint);
  m.inputs.emplace_back("train", a.train);
  m.inputs.emplace_back("test", a.test);
  m.outputs.emplace_back("result_json", dir / "linear.json");
  m.outputs.emplace_back("result_csv", dir / "linear.csv");
  m.write(dir / "manifest.json");

  out << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_oracle(const OracleArgs& a, std::ostream& out) {
  std::optional<WeightedGraph> graph;
  std::optional<Dataset> ds;
  double bandwidth = 0.0;
  if (!a.graph.empty()) {
    require_file(a.graph, "--graph");
    graph = load_graph_csv(a.graph);
  } else {
    require_file(a.data, "--data");
    ds = load_csv(a.data, a.has_labels);
    if (a.bandwidth == "knn") {
      bandwidth = median_knn_distance(ds->features);
    } else if (a.bandwidth == "median") {
      bandwidth = median_pairwise_distance(ds->features);
    } else {
      const auto [ptr, ec] = std::from_chars(a.bandwidth.data(),
                                             a.bandwidth.data() + a.bandwidth.size(), bandwidth);
      if (ec != std::errc() || ptr != a.bandwidth.data() + a.bandwidth.size() ||
          !(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
        throw UsageError("--bandwidth must be knn, median or a positive number");
      }
    }
    graph = build_kernel_graph(ds->features, bandwidth);
  }
  if (a.k < 1 || a.k > graph->size()) {
    throw UsageError("--k must lie in 1.." + std::to_string(graph->size()));
  }
  const EigenmapResult r = generalized_eigenmaps(*graph, a.k);

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  std::string values;
  for (Index i = 0; i < r.eigenvalues.size(); ++i) values += csv::format_double(r.eigenvalues(i)) + "\n";
  std::string embedding;
  for (Index i = 0; i < r.embedding.rows(); ++i) {
    for (Index c = 0; c < r.embedding.cols(); ++c) {
      if (c > 0) embedding += ',';
      embedding += csv::format_double(r.embedding(i, c));
    }
    embedding += '\n';
  }
  write_text(dir / "eigenvalues.csv", values);
  write_text(dir / "embedding.csv", embedding);

  Json j = Json::object();
  j["n"] = graph->size();
  j["k"] = a.k;
  j["eigenvalues"] = std::vector<double>(r.eigenvalues.data(), r.eigenvalues.data() + r.eigenvalues.size());
  j["residual"] = r.residual;
  if (ds) j["bandwidth"] = bandwidth;
  if (ds && ds->labeled() && a.k >= 2) {
    const std::vector<int> split = sign_split(r.embedding.col(1));
    j["sign_split_ari"] = adjusted_rand_index(split, ds->label_vector());
  }

  RunManifest m;
  m.subcommand = "oracle";
  m.config = {{"k", a.k}, {"bandwidth", a.graph.empty() ? a.bandwidth : "n/a"}};
  if (ds) m.config["bandwidth_value"] = bandwidth;
  if (!a.graph.empty()) {
    m.inputs.emplace_back("graph", a.graph);
  } else {
    m.inputs.emplace_back("data", a.data);
  }
  m.outputs.emplace_back("eigenvalues", dir / "eigenvalues.csv");
  m.outputs.emplace_back("embedding", dir / "embedding.csv");
  m.write(dir / "manifest.json");

  out << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_verify(std::uint64_t seed, std::ostream& out, std::ostream& err) {
  const std::vector<IdentityCheck> checks = run_identity_suites(seed);
  const IdentityCheck* failed = nullptr;
  for (const IdentityCheck& c : checks) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << "  worst=" << c.worst
        << "  tol=" << c.tolerance << "  cases=" << c.cases << '\n';
    if (!c.passed && failed == nullptr) failed = &c;
  }
  if (failed != nullptr) {
    err << "identity failed: " << failed->name << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_gen_data(const GenDataArgs& a, std::ostream& out) {
  DataSpec spec = a.spec;
  spec.has_labels = !a.no_labels;
  if (spec.generator != "blobs" && spec.generator != "moons" && spec.generator != "rings") {
    throw UsageError("--kind must be blobs, moons or rings");
  }
  const Dataset ds = generate_dataset(spec, a.seed);
  const fs::path path(a.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_csv(ds, path);

  RunManifest m;
  m.subcommand = "gen-data";
  m.seed = a.seed;
  m.config = {{"kind", spec.generator},     {"classes", spec.classes},
              {"per_class", spec.per_class}, {"dim", spec.dim},
              {"separation", spec.separation}, {"noise", spec.noise},
              {"labels", spec.has_labels}};
  m.outputs.emplace_back("data", path);
  fs::path manifest = path;
  manifest.replace_extension(".manifest.json");
  m.write(manifest);

  out << "wrote " << ds.size() << " samples x " << ds.dim() << " features to " << path.string()
      << '\n';
  return kExitOk;
}

// Maps library exceptions onto the stable exit codes.
template <typename F>
int guarded(F&& body, std::ostream& err) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CorruptArtifact& e) {
    err << "corrupt artifact: " << e.what() << '\n';
    return kExitCorrupt;
  } catch (const ParseError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DivergenceError& e) {
    err << "training diverged: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"dlem: spectral self-supervised representation learning toolkit"};
  app.name("dlem");
  app.require_subcommand(1);

  TrainArgs train_args;
  std::uint64_t train_seed = 0;
  CLI::App* train_cmd = app.add_subcommand("train", "Train an encoder from a JSON config");
  train_cmd->add_option("--config", train_args.config, "JSON config file")->required();
  train_cmd->add_option("--out", train_args.out_dir, "Output directory")->required();
  CLI::Option* seed_opt = train_cmd->add_option("--seed", train_seed, "Overrides the config seed");

  FewShotArgs fs_args;
  CLI::App* fs_cmd = app.add_subcommand("eval-fewshot", "Few-shot episodes on frozen embeddings");
  fs_cmd->add_option("--checkpoint", fs_args.checkpoint)->required();
  fs_cmd->add_option("--data", fs_args.data, "Labelled CSV (label first)")->required();
  fs_cmd->add_option("--out", fs_args.out_dir, "Output directory")->required();
  fs_cmd->add_option("--n-way", fs_args.protocol.n_way)->capture_default_str();
  fs_cmd->add_option("--k-shot", fs_args.protocol.k_shot)->capture_default_str();
  fs_cmd->add_option("--q-query", fs_args.protocol.q_query)->capture_default_str();
  fs_cmd->add_option("--episodes", fs_args.protocol.episodes)->capture_default_str();
  fs_cmd->add_option("--reg", fs_args.protocol.probe.reg_strength, "Probe L2 strength")
      ->capture_default_str();
  fs_cmd->add_option("--probe-point", fs_args.probe_point,
                     "penultimate, output or a block count")
      ->capture_default_str();
  fs_cmd->add_option("--seed", fs_args.seed)->capture_default_str();

  LinearArgs lin_args;
  CLI::App* lin_cmd = app.add_subcommand("eval-linear", "Linear evaluation on frozen embeddings");
  lin_cmd->add_option("--checkpoint", lin_args.checkpoint)->required();
  lin_cmd->add_option("--train", lin_args.train, "Labelled training CSV")->required();
  lin_cmd->add_option("--test", lin_args.test, "Labelled test CSV")->required();
  lin_cmd->add_option("--out", lin_args.out_dir, "Output directory")->required();
  lin_cmd->add_option("--epochs", lin_args.schedule.epochs)->capture_default_str();
  lin_cmd->add_option("--lr0", lin_args.schedule.lr0)->capture_default_str();
  lin_cmd->add_option("--batch-size", lin_args.schedule.batch_size)->capture_default_str();
  lin_cmd->add_option("--probe-point", lin_args.probe_point)->capture_default_str();
  lin_cmd->add_option("--seed", lin_args.schedule.seed)->capture_default_str();

  OracleArgs or_args;
  bool or_no_labels = false;
  CLI::App* or_cmd = app.add_subcommand("oracle", "Generalized eigenmaps of a graph or dataset");
  CLI::Option* graph_opt = or_cmd->add_option("--graph", or_args.graph, "Edge-list CSV i,j,w");
  CLI::Option* data_opt =
      or_cmd->add_option("--data", or_args.data, "Point CSV; builds a Gaussian kernel graph");
  graph_opt->excludes(data_opt);
  or_cmd->add_option("--k", or_args.k, "Number of eigenpairs")->capture_default_str();
  or_cmd->add_option("--bandwidth", or_args.bandwidth, "knn, median or a number")
      ->capture_default_str();
  or_cmd->add_flag("--no-labels", or_no_labels, "--data has no label column");
  or_cmd->add_option("--out", or_args.out_dir, "Output directory")->required();

  std::uint64_t verify_seed = 0;
  CLI::App* verify_cmd = app.add_subcommand("verify", "Run the identity suites");
  verify_cmd->add_option("--seed", verify_seed)->capture_default_str();

  GenDataArgs gen_args;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic dataset as CSV");
  gen_cmd->add_option("--kind", gen_args.spec.generator, "blobs, moons or rings")
      ->capture_default_str();
  gen_cmd->add_option("--classes", gen_args.spec.classes)->capture_default_str();
  gen_cmd->add_option("--per-class", gen_args.spec.per_class)->capture_default_str();
  gen_cmd->add_option("--dim", gen_args.spec.dim, "blobs only")->capture_default_str();
  gen_cmd->add_option("--separation", gen_args.spec.separation, "blobs only")
      ->capture_default_str();
  gen_cmd->add_option("--noise", gen_args.spec.noise, "moons and rings")->capture_default_str();
  gen_cmd->add_option("--seed", gen_args.seed)->capture_default_str();
  gen_cmd->add_flag("--no-labels", gen_args.no_labels);
  gen_cmd->add_option("--out", gen_args.out, "Output CSV path")->required();

  // CLI11 consumes the vector from the back.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  return guarded(
      [&]() -> int {
        if (*train_cmd) {
          if (seed_opt->count() > 0) train_args.seed = train_seed;
          return cmd_train(train_args, out);
        }
        if (*fs_cmd) return cmd_eval_fewshot(fs_args, out);
        if (*lin_cmd) return cmd_eval_linear(lin_args, out);
        if (*or_cmd) {
          if (graph_opt->count() == 0 && data_opt->count() == 0) {
            throw UsageError("oracle needs --graph or --data");
          }
          or_args.has_labels = !or_no_labels;
          return cmd_oracle(or_args, out);
        }
        if (*verify_cmd) return cmd_verify(verify_seed, out, err);
        if (*gen_cmd) return cmd_gen_data(gen_args, out);
        return kExitUsage;
      },
      err);
}

}  // namespace dlem::cli
