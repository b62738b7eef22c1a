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

#ifndef DLEM_CLI_MANIFEST_HPP_
#define DLEM_CLI_MANIFEST_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dlem_cli/run_config.hpp"

namespace dlem::cli {

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& bytes);

/// Record of one subcommand run, written as manifest.json next to its outputs.
struct RunManifest {
  std::string subcommand;
  Json config = Json::object();  // fully resolved, defaults materialized
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::filesystem::path>> inputs;   // role, path
  std::vector<std::pair<std::string, std::filesystem::path>> outputs;  // role, path

  /// Hashes every input and output file at call time.
  Json to_json() const;
  void write(const std::filesystem::path& path) const;
};

}  // namespace dlem::cli

#endif  // DLEM_CLI_MANIFEST_HPP_
