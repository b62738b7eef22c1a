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

#ifndef DLEM_CLI_CLI_HPP_
#define DLEM_CLI_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace dlem::cli {

// Exit codes are part of the command-line contract.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,    // bad flags, config or input files
  kExitRuntime = 3,  // divergence, failed identity, I/O failure
  kExitCorrupt = 4,  // checkpoint failed validation
};

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dlem::cli

#endif  // DLEM_CLI_CLI_HPP_
