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

#ifndef DLEM_GRAPH_IO_HPP_
#define DLEM_GRAPH_IO_HPP_

#include <filesystem>
#include <iosfwd>

#include "dlem/graph.hpp"

namespace dlem {

// Edge-list CSV: one "i,j,weight" triple per line, 0-based indices. The
// vertex count is the largest index plus one. Each unordered pair may appear
// once; its mirror is filled in on load. Self-loops are rejected.
WeightedGraph read_graph_csv(std::istream& in);
WeightedGraph load_graph_csv(const std::filesystem::path& path);

// Writes every nonzero upper-triangle entry with 17 significant digits.
void write_graph_csv(const WeightedGraph& g, std::ostream& out);
void save_graph_csv(const WeightedGraph& g, const std::filesystem::path& path);

}  // namespace dlem

#endif  // DLEM_GRAPH_IO_HPP_
