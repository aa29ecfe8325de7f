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

#include <algorithm>
#include <map>
#include <set>

#include "hiercat/clustering.hpp"
#include "hiercat/reducer.hpp"
#include "hiercat/rng.hpp"
#include "test_support.hpp"

using namespace hiercat;

namespace {

// Leaf geometry realising the two-level walkthrough: leaves 1,2,4,5 share a
// tight cluster, 3 and 6 a second one, and 7,8,9 sit on top of their
// parent's position so the between-level step swallows them.
EmbeddingTable toy_leaf_table(const Hierarchy& h) {
  EmbeddingTable t(2, h);
  t.set(NodeId{2, 1}, Eigen::Vector2d(0.0, 0.0));
  t.set(NodeId{2, 2}, Eigen::Vector2d(0.1, 0.0));
  t.set(NodeId{2, 3}, Eigen::Vector2d(4.0, 0.0));
  t.set(NodeId{2, 4}, Eigen::Vector2d(0.0, 0.1));
  t.set(NodeId{2, 5}, Eigen::Vector2d(0.1, 0.1));
  t.set(NodeId{2, 6}, Eigen::Vector2d(4.1, 0.0));
  t.set(NodeId{2, 7}, Eigen::Vector2d(10.0, 10.0));
  t.set(NodeId{2, 8}, Eigen::Vector2d(10.02, 10.0));
  t.set(NodeId{2, 9}, Eigen::Vector2d(10.0, 10.02));
  return t;
}

std::set<std::set<int>> members_at_level(const ReducedHierarchy& rh, int level) {
  std::set<std::set<int>> out;
  for (int id : rh.levels[static_cast<std::size_t>(level - 1)]) {
    const auto& m = rh.classes[static_cast<std::size_t>(id)].members;
    out.insert(std::set<int>(m.begin(), m.end()));
  }
  return out;
}

}  // namespace

TEST_CASE("toy walkthrough reduces to the expected two-by-two structure") {
  const Hierarchy h = test::two_level_hierarchy();
  const EmbeddingTable table = aggregate_up(toy_leaf_table(h), h);
  const ReduceResult res = reduce(h, table, 0.5, 1);
  const ReducedHierarchy& rh = res.reduced;

  CHECK(rh.num_levels == 2);
  REQUIRE(rh.levels[0].size() == 2);
  REQUIRE(rh.levels[1].size() == 2);
  CHECK(members_at_level(rh, 1) ==
        std::set<std::set<int>>{{1, 2}, {3}});
  CHECK(members_at_level(rh, 2) ==
        std::set<std::set<int>>{{1, 2, 4, 5}, {3, 6}});

  // The class holding {h_13} keeps no descendants; both level-2 classes
  // hang under the merged top class.
  int top_merged = -1, top_single = -1;
  for (int id : rh.levels[0]) {
    if (rh.classes[static_cast<std::size_t>(id)].members.size() == 2)
      top_merged = id;
    else
      top_single = id;
  }
  REQUIRE(top_merged >= 0);
  REQUIRE(top_single >= 0);
  CHECK(rh.children[static_cast<std::size_t>(top_single)].empty());
  CHECK(rh.children[static_cast<std::size_t>(top_merged)].size() == 2);

  // Leaves 7,8,9 collapsed into the singleton top class.
  for (int leaf : {7, 8, 9})
    CHECK(rh.leaf_group[static_cast<std::size_t>(leaf - 1)] == top_single);
  CHECK(rh.group_count() == 3);

  // The walkthrough's between-level step for the merged class must refuse
  // to collapse: the parent is the least similar member of its cluster,
  // or it stands alone.
  bool saw_vertical_merged = false;
  for (const auto& rec : res.trace) {
    if (rec.step == "vertical" && rec.unit == "g1_1") {
      saw_vertical_merged = true;
      CHECK(rec.collapsed.empty());
    }
    if (rec.step == "vertical" && rec.unit == "g1_2") {
      CHECK(rec.k_star == 1);
      CHECK(rec.collapsed.size() == 3);
    }
  }
  CHECK(saw_vertical_merged);
}

TEST_CASE("identical embeddings collapse everything") {
  const Hierarchy h = test::two_level_hierarchy();
  EmbeddingTable t(2, h);
  for (int s = 1; s <= 9; ++s) t.set(NodeId{2, s}, Eigen::Vector2d(1.0, 2.0));
  const EmbeddingTable table = aggregate_up(t, h);
  const ReduceResult res = reduce(h, table, 0.7, 1);
  CHECK(res.reduced.num_levels == 1);
  CHECK(res.reduced.levels[0].size() == 1);
  CHECK(res.reduced.group_count() == 1);
}

TEST_CASE("si_star = 1 collapses any non-degenerate embedding set") {
  const Hierarchy h = test::two_level_hierarchy();
  Rng rng(3);
  EmbeddingTable t(2, h);
  for (int s = 1; s <= 9; ++s)
    t.set(NodeId{2, s}, Eigen::Vector2d(rng.normal(), rng.normal()));
  const EmbeddingTable table = aggregate_up(t, h);
  const ReduceResult res = reduce(h, table, 1.0, 1);
  CHECK(res.reduced.num_levels == 1);
  CHECK(res.reduced.levels[0].size() == 1);
  CHECK(res.reduced.group_count() == 1);
}

TEST_CASE("a parent alone in its cluster collapses nothing") {
  std::vector<std::vector<std::string>> rows;
  for (int c = 1; c <= 6; ++c) rows.push_back({"p", "c" + std::to_string(c)});
  const Hierarchy h = Hierarchy::from_rows(rows);
  EmbeddingTable table(2, h);
  table.set(NodeId{1, 1}, Eigen::Vector2d(0.0, 10.0));  // parent off on its own
  table.set(NodeId{2, 1}, Eigen::Vector2d(0.0, 0.0));
  table.set(NodeId{2, 2}, Eigen::Vector2d(0.05, 0.0));
  table.set(NodeId{2, 3}, Eigen::Vector2d(0.0, 0.05));
  table.set(NodeId{2, 4}, Eigen::Vector2d(4.0, 0.0));
  table.set(NodeId{2, 5}, Eigen::Vector2d(4.05, 0.0));
  table.set(NodeId{2, 6}, Eigen::Vector2d(4.0, 0.05));
  const ReduceResult res = reduce(h, table, 0.5, 1);
  REQUIRE(res.trace.size() >= 2);
  const TraceRecord& vertical = res.trace[1];
  REQUIRE(vertical.step == "vertical");
  CHECK(vertical.collapsed.empty());
  CHECK_FALSE(vertical.veto);
  CHECK(res.reduced.num_levels == 2);
  CHECK(res.reduced.levels[1].size() == 2);
  CHECK(res.pseudos.empty());
}

TEST_CASE("reduction requires a fully covered table") {
  const Hierarchy h = test::two_level_hierarchy();
  const EmbeddingTable leaves = toy_leaf_table(h);
  CHECK_THROWS_WITH_AS(reduce(h, leaves, 0.5, 1), doctest::Contains("MissingLeaf"),
                       Error);
}

TEST_CASE("conservation: every class lands in exactly one cluster or pseudocluster") {
  const Hierarchy h = test::two_level_hierarchy();
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    EmbeddingTable t(2, h);
    for (int s = 1; s <= 9; ++s)
      t.set(NodeId{2, s}, Eigen::Vector2d(rng.normal(), rng.normal()));
    const double si_star = rng.uniform(-0.2, 0.9);
    const ReduceResult res = reduce(h, aggregate_up(t, h), si_star, trial);
    for (int r = 1; r <= 2; ++r) {
      std::multiset<int> seen;
      for (int id : res.reduced.levels[static_cast<std::size_t>(r - 1)])
        for (int m : res.reduced.classes[static_cast<std::size_t>(id)].members)
          seen.insert(m);
      for (const auto& pseudo : res.pseudos)
        if (pseudo.level == r)
          for (int m : pseudo.members) seen.insert(m);
      REQUIRE(static_cast<int>(seen.size()) == h.level_size(r));
      for (int s = 1; s <= h.level_size(r); ++s) CHECK(seen.count(s) == 1);
    }
    // leaf_group is total and leaf-partitioning by construction.
    CHECK(static_cast<int>(res.reduced.leaf_group.size()) == 9);
  }
}

TEST_CASE("reduction output is deterministic across repeated runs") {
  const Hierarchy h = test::two_level_hierarchy();
  Rng rng(23);
  EmbeddingTable t(2, h);
  for (int s = 1; s <= 9; ++s)
    t.set(NodeId{2, s}, Eigen::Vector2d(rng.normal(), rng.normal()));
  const EmbeddingTable table = aggregate_up(t, h);
  const ReduceResult a = reduce(h, table, 0.4, 99);
  const ReduceResult b = reduce(h, table, 0.4, 99);
  CHECK(reduced_to_json(a.reduced, h) == reduced_to_json(b.reduced, h));
  CHECK(trace_to_jsonl(a.trace) == trace_to_jsonl(b.trace));
  CHECK(structure_signature(a.reduced) == structure_signature(b.reduced));
}

TEST_CASE("per-call monotonicity: raising si_star only forces more single clusters") {
  Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const int j_count = 4 + static_cast<int>(rng.uniform_int(0, 8));
    cluster::MatrixX<double> items(2, j_count);
    for (int i = 0; i < j_count; ++i)
      items.col(i) = Eigen::Vector2d(rng.normal(), rng.normal());
    int prev_k = -1;
    bool forced_before = false;
    for (double si_star : {-1.0, 0.0, 0.3, 0.6, 0.9, 1.0}) {
      const auto res = cluster::select_k(items, si_star, 7);
      if (res.solution.k > 1) {
        CHECK_FALSE(forced_before);
        if (prev_k > 1) CHECK(res.solution.k == prev_k);
        prev_k = res.solution.k;
      } else if (res.forced_single) {
        forced_before = true;
      }
    }
  }
}

TEST_CASE("structure signatures distinguish different reductions") {
  const Hierarchy h = test::two_level_hierarchy();
  const EmbeddingTable toy = aggregate_up(toy_leaf_table(h), h);
  const ReduceResult fine = reduce(h, toy, 0.5, 1);
  const ReduceResult coarse = reduce(h, toy, 1.0, 1);
  CHECK(structure_signature(fine.reduced) != structure_signature(coarse.reduced));
}

TEST_CASE("ragged descent: clusters formed under a pseudocluster attach to its target") {
  // Three levels; the middle level sits exactly on the top class so it
  // collapses, while the leaves split into two clear groups. The resulting
  // leaf classes must hang directly under the top-level class.
  std::vector<std::vector<std::string>> rows;
  for (int leaf = 1; leaf <= 6; ++leaf)
    rows.push_back({"top", "mid" + std::to_string(leaf <= 3 ? 1 : 2),
                    "leaf" + std::to_string(leaf)});
  const Hierarchy h = Hierarchy::from_rows(rows);
  EmbeddingTable table(2, h);
  table.set(NodeId{1, 1}, Eigen::Vector2d(0, 0));
  table.set(NodeId{2, 1}, Eigen::Vector2d(0.01, 0));
  table.set(NodeId{2, 2}, Eigen::Vector2d(-0.01, 0));
  for (int leaf = 1; leaf <= 3; ++leaf)
    table.set(NodeId{3, leaf}, Eigen::Vector2d(5.0 + 0.01 * leaf, 0));
  for (int leaf = 4; leaf <= 6; ++leaf)
    table.set(NodeId{3, leaf}, Eigen::Vector2d(-5.0 - 0.01 * leaf, 0));

  const ReduceResult res = reduce(h, table, 0.5, 1);
  const ReducedHierarchy& rh = res.reduced;
  CHECK(rh.levels[0].size() == 1);
  CHECK(rh.levels[1].empty());
  REQUIRE(rh.levels[2].size() == 2);
  const int top = rh.levels[0][0];
  for (int id : rh.levels[2])
    CHECK(rh.classes[static_cast<std::size_t>(id)].parent == top);
  CHECK(rh.num_levels == 3);
  CHECK(rh.group_count() == 2);
}
