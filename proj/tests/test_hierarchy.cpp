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

#include <set>

#include "hiercat/hierarchy.hpp"
#include "test_support.hpp"

using namespace hiercat;

TEST_CASE("two-level example hierarchy validates and answers queries") {
  const Hierarchy h = test::two_level_hierarchy();
  CHECK(h.num_levels() == 2);
  CHECK(h.level_size(1) == 3);
  CHECK(h.level_size(2) == 9);
  CHECK(h.children_of(NodeId{1, 1}) == std::vector<int>{1, 2, 3});
  CHECK(h.parent_of(NodeId{2, 7}) == NodeId{1, 3});
}

TEST_CASE("leaf_path walks ancestors top-down") {
  const Hierarchy h = test::two_level_hierarchy();
  const auto path = h.leaf_path(NodeId{2, 7});
  REQUIRE(path.size() == 2);
  CHECK(path[0] == NodeId{1, 3});
  CHECK(path[1] == NodeId{2, 7});

  CHECK_THROWS_WITH_AS(h.leaf_path(NodeId{1, 1}), doctest::Contains("NotALeaf"), Error);
}

TEST_CASE("single-node hierarchy is valid and its path is itself") {
  const Hierarchy h = Hierarchy::from_rows({{"only"}});
  CHECK(h.num_levels() == 1);
  const auto path = h.leaf_path(NodeId{1, 1});
  REQUIRE(path.size() == 1);
  CHECK(path[0] == NodeId{1, 1});
}

TEST_CASE("a node listed under two parents is rejected") {
  CHECK_THROWS_WITH_AS(Hierarchy::from_rows({{"a", "x"}, {"b", "x"}}),
                       doctest::Contains("MultiParent"), Error);
}

TEST_CASE("duplicate leaf rows are rejected") {
  CHECK_THROWS_WITH_AS(Hierarchy::from_rows({{"a", "x"}, {"a", "x"}}),
                       doctest::Contains("DuplicateLeaf"), Error);
}

TEST_CASE("builder-level structural violations are reported") {
  SUBCASE("orphan node") {
    Hierarchy h(2);
    h.add_node(1, "a");
    h.add_node(2, "x");
    CHECK_THROWS_WITH_AS(h.validate(), doctest::Contains("OrphanNode"), Error);
  }
  SUBCASE("interior node without children") {
    Hierarchy h(2);
    h.add_node(1, "a");
    h.add_node(1, "b");
    h.add_node(2, "x");
    h.link(NodeId{1, 1}, NodeId{2, 1});
    CHECK_THROWS_WITH_AS(h.validate(), doctest::Contains("EmptyInterior"), Error);
  }
  SUBCASE("edge skipping a level") {
    Hierarchy h(3);
    h.add_node(1, "a");
    h.add_node(2, "m");
    h.add_node(3, "x");
    h.link(NodeId{1, 1}, NodeId{2, 1});
    h.link(NodeId{1, 1}, NodeId{3, 1});
    CHECK_THROWS_WITH_AS(h.validate(), doctest::Contains("LevelGap"), Error);
  }
  SUBCASE("double link to the same child") {
    Hierarchy h(2);
    h.add_node(1, "a");
    h.add_node(1, "b");
    h.add_node(2, "x");
    h.add_node(2, "y");
    h.link(NodeId{1, 1}, NodeId{2, 1});
    h.link(NodeId{1, 2}, NodeId{2, 1});
    h.link(NodeId{1, 2}, NodeId{2, 2});
    CHECK_THROWS_WITH_AS(h.validate(), doctest::Contains("MultiParent"), Error);
  }
}

TEST_CASE("leaf paths are unique and injective over the leaf set") {
  const Hierarchy h = test::two_level_hierarchy();
  std::set<std::vector<int>> seen;
  for (int s = 1; s <= h.num_leaves(); ++s) {
    const auto path = h.leaf_path(NodeId{2, s});
    std::vector<int> key;
    for (const auto& node : path) key.push_back(node.index);
    CHECK(seen.insert(key).second);
  }
  CHECK(static_cast<int>(seen.size()) == h.num_leaves());
}

TEST_CASE("children counts per level partition the next level") {
  const Hierarchy h = test::two_level_hierarchy();
  int total = 0;
  for (int s = 1; s <= h.level_size(1); ++s)
    total += static_cast<int>(h.children_of(NodeId{1, s}).size());
  CHECK(total == h.level_size(2));
}

TEST_CASE("hierarchy csv round trip") {
  const std::string path = test::temp_file("hier.csv");
  test::write_file(path,
                   "level_1,level_2\n"
                   "a,x\n"
                   "a,y\n"
                   "b,z\n");
  const Hierarchy h = Hierarchy::from_csv(path);
  CHECK(h.level_size(1) == 2);
  CHECK(h.level_size(2) == 3);
  CHECK(h.label(NodeId{2, 3}) == "z");
  CHECK(h.index_of(2, "y") == 2);
}
