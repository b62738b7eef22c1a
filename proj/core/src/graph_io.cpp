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

#include "dlem/graph_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "dlem/csv.hpp"
#include "dlem/error.hpp"

namespace dlem {
namespace {

// Graphs are stored densely; anything larger is almost certainly a typo.
constexpr long long kMaxVertices = 20000;

}  // namespace

WeightedGraph read_graph_csv(std::istream& in) {
  std::vector<std::tuple<Index, Index, double>> edges;
  std::set<std::pair<Index, Index>> seen;
  Index max_index = -1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::is_blank(line)) continue;
    const auto cells = csv::split(line);
    if (cells.size() != 3) {
      throw ParseError("expected 3 fields (i,j,weight), got " + std::to_string(cells.size()),
                       line_no);
    }
    const long long i = csv::parse_int(cells[0], line_no);
    const long long j = csv::parse_int(cells[1], line_no);
    const double w = csv::parse_double(cells[2], line_no);
    if (i < 0 || j < 0) throw ParseError("negative vertex index", line_no);
    if (i >= kMaxVertices || j >= kMaxVertices) {
      throw ParseError("vertex index exceeds the dense limit of " + std::to_string(kMaxVertices),
                       line_no);
    }
    if (i == j) throw ParseError("self-loop at vertex " + std::to_string(i), line_no);
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ParseError("edge weight must be finite and nonnegative", line_no);
    }
    const std::pair<Index, Index> key{std::min<Index>(i, j), std::max<Index>(i, j)};
    if (!seen.insert(key).second) {
      throw ParseError("duplicate edge (" + std::to_string(key.first) + "," +
                           std::to_string(key.second) + ")",
                       line_no);
    }
    edges.emplace_back(key.first, key.second, w);
    max_index = std::max(max_index, key.second);
  }
  if (max_index < 1) throw ParseError("graph file has no edges", line_no);
  Matrix s = Matrix::Zero(max_index + 1, max_index + 1);
  for (const auto& [i, j, w] : edges) {
    s(i, j) = w;
    s(j, i) = w;
  }
  return WeightedGraph(std::move(s));
}

WeightedGraph load_graph_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open graph file " + path.string());
  return read_graph_csv(in);
}

void write_graph_csv(const WeightedGraph& g, std::ostream& out) {
  for (Index i = 0; i < g.size(); ++i) {
    for (Index j = i + 1; j < g.size(); ++j) {
      if (g.similarity(i, j) == 0.0) continue;
      out << i << ',' << j << ',' << csv::format_double(g.similarity(i, j)) << '\n';
    }
  }
}

void save_graph_csv(const WeightedGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write graph file " + path.string());
  write_graph_csv(g, out);
}

}  // namespace dlem
