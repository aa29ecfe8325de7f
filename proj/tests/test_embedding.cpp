/*
 * Copyright (C) 2026 The hiercat Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "hiercat/embedding_table.hpp"
#include "hiercat/rng.hpp"
#include "test_support.hpp"

using namespace hiercat;

namespace {

EmbeddingTable random_leaf_table(const Hierarchy& h, int q_e, Rng& rng) {
  EmbeddingTable t(q_e, h);
  const int R = h.num_levels();
  for (int s = 1; s <= h.level_size(R); ++s) {
    Eigen::VectorXd v(q_e);
    for (int u = 0; u < q_e; ++u) v(u) = rng.normal();
    t.set(NodeId{R, s}, v);
  }
  return t;
}

// Random hierarchy with 2-4 levels and 1-4 children per interior node.
Hierarchy random_hierarchy(Rng& rng) {
  const int R = 2 + static_cast<int>(rng.uniform_int(0, 2));
  std::vector<std::vector<std::string>> rows;
  int counter = 0;
  std::function<void(std::vector<std::string>&, int)> grow =
      [&](std::vector<std::string>& prefix, int level) {
        const int kids = 1 + static_cast<int>(rng.uniform_int(0, 3));
        for (int c = 0; c < kids; ++c) {
          prefix.push_back("n" + std::to_string(level) + "_" + std::to_string(++counter));
          if (level == R)
            rows.push_back(prefix);
          else
            grow(prefix, level + 1);
          prefix.pop_back();
        }
      };
  std::vector<std::string> prefix;
  const int tops = 2 + static_cast<int>(rng.uniform_int(0, 2));
  for (int t = 0; t < tops; ++t) {
    prefix.push_back("top" + std::to_string(t));
    if (R == 1)
      rows.push_back(prefix);
    else
      grow(prefix, 2);
    prefix.pop_back();
  }
  return Hierarchy::from_rows(rows);
}

}  // namespace

TEST_CASE("aggregate_up averages children, level by level") {
  const Hierarchy h = test::two_level_hierarchy();
  EmbeddingTable leaves(2, h);
  for (int s = 1; s <= 9; ++s)
    leaves.set(NodeId{2, s}, Eigen::Vector2d(static_cast<double>(s), 2.0 * s));
  const EmbeddingTable full = aggregate_up(leaves, h);
  // Parent of leaves 1..3 averages (1,2),(2,4),(3,6).
  CHECK(full.get(NodeId{1, 1}) == Eigen::Vector2d(2.0, 4.0));
  CHECK(full.get(NodeId{1, 3}) == Eigen::Vector2d(8.0, 16.0));
  // Leaf vectors unchanged.
  for (int s = 1; s <= 9; ++s)
    CHECK(full.get(NodeId{2, s}) == leaves.get(NodeId{2, s}));
}

TEST_CASE("parent with children (1,2) and (3,4) averages to (2,3)") {
  const Hierarchy h = Hierarchy::from_rows({{"p", "a"}, {"p", "b"}});
  EmbeddingTable leaves(2, h);
  leaves.set(NodeId{2, 1}, Eigen::Vector2d(1, 2));
  leaves.set(NodeId{2, 2}, Eigen::Vector2d(3, 4));
  const EmbeddingTable full = aggregate_up(leaves, h);
  CHECK(full.get(NodeId{1, 1}) == Eigen::Vector2d(2, 3));
}

TEST_CASE("a single child passes its vector through unchanged") {
  const Hierarchy h = Hierarchy::from_rows({{"p", "a"}, {"q", "b"}});
  EmbeddingTable leaves(2, h);
  leaves.set(NodeId{2, 1}, Eigen::Vector2d(5, -1));
  leaves.set(NodeId{2, 2}, Eigen::Vector2d(0, 0));
  const EmbeddingTable full = aggregate_up(leaves, h);
  CHECK(full.get(NodeId{1, 1}) == Eigen::Vector2d(5, -1));
}

TEST_CASE("missing leaf vector is reported") {
  const Hierarchy h = test::two_level_hierarchy();
  EmbeddingTable leaves(2, h);
  leaves.set(NodeId{2, 1}, Eigen::Vector2d(0, 0));
  CHECK_THROWS_WITH_AS(aggregate_up(leaves, h), doctest::Contains("MissingLeaf"), Error);
}

TEST_CASE("non-finite vectors are rejected at insertion") {
  const Hierarchy h = test::two_level_hierarchy();
  EmbeddingTable t(2, h);
  Eigen::Vector2d bad(std::numeric_limits<double>::quiet_NaN(), 0);
  CHECK_THROWS_WITH_AS(t.set(NodeId{2, 1}, bad), doctest::Contains("NonFinite"), Error);
}

TEST_CASE("recursive mean property on random trees") {
  Rng rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const Hierarchy h = random_hierarchy(rng);
    const int q_e = 1 + static_cast<int>(rng.uniform_int(0, 2));
    const EmbeddingTable leaves = random_leaf_table(h, q_e, rng);
    const EmbeddingTable full = aggregate_up(leaves, h);
    for (int r = 1; r < h.num_levels(); ++r) {
      for (int s = 1; s <= h.level_size(r); ++s) {
        const auto& kids = h.children_of(NodeId{r, s});
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(q_e);
        for (int c : kids) mean += full.get(NodeId{r + 1, c});
        mean /= static_cast<double>(kids.size());
        CHECK((full.get(NodeId{r, s}) - mean).cwiseAbs().maxCoeff() == 0.0);
      }
    }
  }
}

TEST_CASE("translation equivariance") {
  Rng rng(7);
  const Hierarchy h = test::two_level_hierarchy();
  const EmbeddingTable leaves = random_leaf_table(h, 3, rng);
  const Eigen::Vector3d shift(0.5, -2.0, 4.0);
  EmbeddingTable shifted(3, h);
  for (int s = 1; s <= 9; ++s)
    shifted.set(NodeId{2, s}, leaves.get(NodeId{2, s}) + shift);
  const EmbeddingTable full = aggregate_up(leaves, h);
  const EmbeddingTable full_shifted = aggregate_up(shifted, h);
  for (int r = 1; r <= 2; ++r)
    for (int s = 1; s <= h.level_size(r); ++s) {
      const Eigen::VectorXd diff =
          full_shifted.get(NodeId{r, s}) - full.get(NodeId{r, s}) - shift;
      CHECK(diff.cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("re-aggregating a fully covered table reproduces it bitwise") {
  Rng rng(13);
  const Hierarchy h = test::two_level_hierarchy();
  const EmbeddingTable full = aggregate_up(random_leaf_table(h, 2, rng), h);
  const EmbeddingTable again = aggregate_up(full, h);
  for (int r = 1; r <= 2; ++r)
    for (int s = 1; s <= h.level_size(r); ++s) {
      const Eigen::VectorXd a = full.get(NodeId{r, s});
      const Eigen::VectorXd b = again.get(NodeId{r, s});
      CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
    }
}

TEST_CASE("embedding csv round trip covers all levels") {
  Rng rng(19);
  const Hierarchy h = test::two_level_hierarchy();
  const EmbeddingTable full = aggregate_up(random_leaf_table(h, 2, rng), h);
  const std::string path = test::temp_file("embed.csv");
  write_embedding_csv(path, full, h);
  const EmbeddingTable loaded = read_embedding_csv(path, h);
  for (int r = 1; r <= 2; ++r) {
    CHECK(loaded.level_covered(r));
    for (int s = 1; s <= h.level_size(r); ++s)
      CHECK(loaded.get(NodeId{r, s}) == full.get(NodeId{r, s}));
  }
}
