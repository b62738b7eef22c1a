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

#ifndef DLEM_CLI_VERIFY_HPP_
#define DLEM_CLI_VERIFY_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace dlem::cli {

struct IdentityCheck {
  std::string name;
  bool passed = false;
  double worst = 0.0;      // largest violation seen
  double tolerance = 0.0;
  int cases = 0;
};

/// Fast randomized checks of the library's mathematical identities:
/// cut objective vs transition probabilities, Z^T D Z = I, stationarity,
/// eigen-solve residuals, the relaxation bound against brute force, the
/// Frobenius expansion of the decorrelation loss and step gradients
/// against extrapolated central differences.
std::vector<IdentityCheck> run_identity_suites(std::uint64_t seed);

}  // namespace dlem::cli

#endif  // DLEM_CLI_VERIFY_HPP_
