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

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "dlem/error.hpp"
#include "test_support.hpp"

namespace dlem {
namespace {

std::size_t error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    read_graph_csv(in);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

TEST(GraphCsvTest, LoadsAndMirrors) {
  std::istringstream in("0,1,2.5\n1,2,1\n");
  const WeightedGraph g = read_graph_csv(in);
  EXPECT_EQ(g.size(), 3);
  EXPECT_EQ(g.similarity(1, 0), 2.5);
  EXPECT_EQ(g.similarity(2, 1), 1.0);
  EXPECT_EQ(g.similarity(0, 2), 0.0);
}

TEST(GraphCsvTest, RoundTripIsExact) {
  Rng rng(3);
  const WeightedGraph g = testing::random_graph(9, rng);
  std::stringstream buf;
  write_graph_csv(g, buf);
  EXPECT_EQ(read_graph_csv(buf).similarity(), g.similarity());

  const auto path = std::filesystem::temp_directory_path() / "dlem_graph_test.csv";
  save_graph_csv(g, path);
  EXPECT_EQ(load_graph_csv(path).similarity(), g.similarity());
  std::filesystem::remove(path);
}

TEST(GraphCsvTest, RejectsMalformedInput) {
  EXPECT_EQ(error_line("0,1,1\n1,0,1\n"), 2u);   // same unordered pair twice
  EXPECT_EQ(error_line("0,1,1\n2,2,1\n"), 2u);   // self-loop
  EXPECT_EQ(error_line("0,1\n"), 1u);            // missing weight
  EXPECT_EQ(error_line("0,1,1\n1,x,1\n"), 2u);   // non-numeric index
  EXPECT_EQ(error_line("0,1,-1\n"), 1u);         // negative weight
  std::istringstream isolated("0,1,1\n3,1,1\n");  // vertex 2 has no edges
  EXPECT_THROW(read_graph_csv(isolated), InvalidArgument);
}

}  // namespace
}  // namespace dlem
