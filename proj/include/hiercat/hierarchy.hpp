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

#ifndef HIERCAT_HIERARCHY_HPP_
#define HIERCAT_HIERARCHY_HPP_

#include <string>
#include <unordered_map>
#include <vector>

#include "hiercat/common.hpp"

namespace hiercat {

// Rooted tree of class nodes over R levels. Every node at level r > 1 has
// exactly one parent at level r - 1; every node at level r < R has at least
// one child. Node identity is (level, index) with the index assigned by
// first-appearance order in the input; labels are external strings and are
// unique within a level.
//
// Immutable once validated; safe for concurrent reads.
class Hierarchy {
 public:
  explicit Hierarchy(int num_levels);

  // One row per leaf, each row a full path of R labels (top level first).
  // Builds nodes in first-appearance order and validates the result.
  static Hierarchy from_rows(const std::vector<std::vector<std::string>>& leaf_paths);

  // CSV with header level_1,...,level_R.
  static Hierarchy from_csv(const std::string& path);

  // Low-level construction for programmatic hierarchies. link() accepts
  // arbitrary endpoints; validate() reports structural violations
  // (MultiParent, OrphanNode, EmptyInterior, LevelGap).
  NodeId add_node(int level, const std::string& label);
  void link(NodeId parent, NodeId child);
  void validate();

  bool validated() const { return validated_; }
  int num_levels() const { return num_levels_; }
  int level_size(int level) const;
  int num_leaves() const { return level_size(num_levels_); }

  const std::string& label(NodeId id) const;
  // Returns index in 1..n_level, or 0 when the label is absent.
  int index_of(int level, const std::string& label) const;
  NodeId parent_of(NodeId id) const;
  // Child indices at id.level + 1, ascending.
  const std::vector<int>& children_of(NodeId id) const;

  // Ancestor chain top-down ending in `leaf`; element at position r-1 has
  // level r. Requires leaf.level == R.
  std::vector<NodeId> leaf_path(NodeId leaf) const;

  // Ancestor index (1-based) of a leaf at the given level.
  int ancestor_at(int leaf_index, int level) const;

 private:
  void check_node(NodeId id) const;
  void require_validated() const;

  int num_levels_;
  std::vector<std::vector<std::string>> labels_;                 // per level
  std::vector<std::unordered_map<std::string, int>> by_label_;   // label -> 1-based index
  std::vector<std::pair<NodeId, NodeId>> edges_;                 // (parent, child)
  // Derived on validate():
  std::vector<std::vector<int>> parent_;                          // per level r>=2, 1-based parent index
  std::vector<std::vector<std::vector<int>>> children_;           // per level r<R
  bool validated_ = false;
};

}  // namespace hiercat

#endif  // HIERCAT_HIERARCHY_HPP_
