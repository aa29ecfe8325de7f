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

#ifndef HIERCAT_REDUCER_HPP_
#define HIERCAT_REDUCER_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hiercat/common.hpp"
#include "hiercat/embedding_table.hpp"
#include "hiercat/hierarchy.hpp"

namespace hiercat {

// One class of the reduced hierarchy. `members` are the original classes
// merged into it; `parent` is the nearest surviving ancestor class, which
// may sit more than one level up when intermediate classes were collapsed.
struct ReducedClass {
  int id = -1;
  int level = 0;  // 1-based
  int index = 0;  // creation order within the level, 1-based
  std::vector<int> members;
  int parent = -1;
};

struct ReducedHierarchy {
  int num_levels = 0;  // deepest level holding a reduced class
  std::vector<ReducedClass> classes;
  std::vector<std::vector<int>> levels;    // class ids per original level
  std::vector<std::vector<int>> children;  // per class id
  // Original leaf (0-based position at level R) -> id of the reduced class
  // its observations belong to. Total over the leaf set.
  std::vector<int> leaf_group;

  int group_count() const;
  std::string class_name(int id) const;
};

// Label-invariant structural identity: two reduced hierarchies are the same
// structure iff a level-preserving bijection matches children maps and
// leaf_group partitions. Implemented by keying every class on its
// descendant-leaf set, which is unique per level.
std::string structure_signature(const ReducedHierarchy& rh);

// One record per select_k call, enough to replay every decision.
struct TraceRecord {
  std::string step;  // "horizontal" or "vertical"
  int level = 0;
  std::string unit;  // task owner: cluster/pseudocluster name, "root" at level 1
  std::vector<std::string> items;
  std::vector<std::pair<int, double>> si_curve;
  int k_star = 1;
  bool forced_single = false;
  bool veto = false;  // vertical only: parent was the least similar member
  std::vector<std::vector<std::string>> clusters;
  std::vector<std::string> collapsed;
};

// Classes collapsed into an ancestor, carried per level so their
// descendants keep being processed.
struct PseudoInfo {
  int level = 0;
  int index = 0;
  std::vector<int> members;  // original indices at `level`
  int target = -1;           // reduced class the members collapsed into
};

struct ReduceResult {
  ReducedHierarchy reduced;
  std::vector<PseudoInfo> pseudos;
  std::vector<TraceRecord> trace;
};

// Alternating within-level and between-level clustering over the embedding
// table, top-down. Requires the table to cover every level (aggregate_up
// output). Deterministic given the seed.
ReduceResult reduce(const Hierarchy& h, const EmbeddingTable& table, double si_star,
                    std::uint64_t seed);

// Step-wise driver behind reduce(), exposed so single steps can be applied
// and inspected. Levels must be processed in order: horizontal(1),
// vertical(1), horizontal(2), ..., horizontal(R).
class ReduceState {
 public:
  ReduceState(const Hierarchy& h, const EmbeddingTable& table, double si_star,
              std::uint64_t seed);

  void horizontal_step(int level);
  void vertical_step(int level);
  void run_all();

  ReduceResult result() const;

  // Active (not collapsed) descendants of the reduced class created
  // `index`-th at `level`; original indices at level+1.
  const std::vector<int>& active_descendants(int level, int index) const;

 private:
  struct Unit {
    bool pseudo = false;
    int level = 0;
    int index = 0;
    std::vector<int> members;
    Eigen::VectorXd embedding;
    std::vector<int> desc_all;
    std::vector<int> desc_active;
    int flat_id = -1;      // clusters only
    int parent_flat = -1;  // clusters: reduced parent; pseudos: collapse target
  };

  void process_unit_vertical(Unit& unit, int level);
  std::vector<int> children_union(int level, const std::vector<int>& members) const;
  std::string unit_name(const Unit& u) const;

  const Hierarchy& h_;
  const EmbeddingTable& table_;
  double si_star_;
  std::uint64_t seed_;
  int next_flat_id_ = 0;
  std::vector<std::vector<Unit>> clusters_;  // per level
  std::vector<std::vector<Unit>> pseudos_;   // per level
  std::vector<TraceRecord> trace_;
  int levels_done_ = 0;
};

// JSON/JSONL serialisation of results; formats are stable and versioned.
std::string reduced_to_json(const ReducedHierarchy& rh, const Hierarchy& h);
std::string trace_to_jsonl(const std::vector<TraceRecord>& trace);
void write_group_csv(const std::string& path, const ReducedHierarchy& rh,
                     const Hierarchy& h);

}  // namespace hiercat

#endif  // HIERCAT_REDUCER_HPP_
