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

#include "hiercat/hierarchy.hpp"

#include <algorithm>

#include "hiercat/csv.hpp"

namespace hiercat {

Hierarchy::Hierarchy(int num_levels) : num_levels_(num_levels) {
  if (num_levels < 1)
    throw Error(Errc::InvalidArgument, "hierarchy needs at least one level");
  labels_.resize(static_cast<std::size_t>(num_levels));
  by_label_.resize(static_cast<std::size_t>(num_levels));
}

NodeId Hierarchy::add_node(int level, const std::string& label) {
  if (level < 1 || level > num_levels_)
    throw Error(Errc::InvalidArgument, "level out of range: " + std::to_string(level));
  auto& names = labels_[static_cast<std::size_t>(level - 1)];
  auto& index = by_label_[static_cast<std::size_t>(level - 1)];
  if (index.contains(label))
    throw Error(Errc::InvalidArgument,
                "duplicate label at level " + std::to_string(level) + ": " + label);
  names.push_back(label);
  const int idx = static_cast<int>(names.size());
  index.emplace(label, idx);
  validated_ = false;
  return NodeId{level, idx};
}

void Hierarchy::link(NodeId parent, NodeId child) {
  check_node(parent);
  check_node(child);
  edges_.emplace_back(parent, child);
  validated_ = false;
}

void Hierarchy::check_node(NodeId id) const {
  if (id.level < 1 || id.level > num_levels_)
    throw Error(Errc::InvalidArgument, "node level out of range");
  if (id.index < 1 ||
      id.index > static_cast<int>(labels_[static_cast<std::size_t>(id.level - 1)].size()))
    throw Error(Errc::InvalidArgument, "node index out of range");
}

void Hierarchy::validate() {
  const auto R = static_cast<std::size_t>(num_levels_);
  parent_.assign(R, {});
  children_.assign(R, {});
  for (std::size_t r = 0; r < R; ++r) {
    parent_[r].assign(labels_[r].size(), 0);
    children_[r].assign(labels_[r].size(), {});
  }
  for (const auto& [p, c] : edges_) {
    if (c.level != p.level + 1)
      throw Error(Errc::LevelGap, "edge " + label(p) + " -> " + label(c) +
                                      " skips levels (" + std::to_string(p.level) +
                                      " -> " + std::to_string(c.level) + ")");
    int& slot = parent_[static_cast<std::size_t>(c.level - 1)]
                       [static_cast<std::size_t>(c.index - 1)];
    if (slot != 0 && slot != p.index)
      throw Error(Errc::MultiParent,
                  "node " + label(c) + " at level " + std::to_string(c.level) +
                      " has parents " + label(NodeId{p.level, slot}) + " and " + label(p));
    if (slot == 0) {
      slot = p.index;
      children_[static_cast<std::size_t>(p.level - 1)]
               [static_cast<std::size_t>(p.index - 1)]
          .push_back(c.index);
    }
  }
  for (std::size_t r = 1; r < R; ++r) {
    for (std::size_t s = 0; s < labels_[r].size(); ++s) {
      if (parent_[r][s] == 0)
        throw Error(Errc::OrphanNode, "node " + labels_[r][s] + " at level " +
                                          std::to_string(r + 1) + " has no parent");
    }
  }
  for (std::size_t r = 0; r + 1 < R; ++r) {
    for (std::size_t s = 0; s < labels_[r].size(); ++s) {
      if (children_[r][s].empty())
        throw Error(Errc::EmptyInterior, "interior node " + labels_[r][s] +
                                             " at level " + std::to_string(r + 1) +
                                             " has no children");
      std::sort(children_[r][s].begin(), children_[r][s].end());
    }
  }
  for (std::size_t r = 0; r < R; ++r) {
    if (labels_[r].empty())
      throw Error(Errc::InvalidArgument, "level " + std::to_string(r + 1) + " is empty");
  }
  validated_ = true;
}

Hierarchy Hierarchy::from_rows(const std::vector<std::vector<std::string>>& leaf_paths) {
  if (leaf_paths.empty())
    throw Error(Errc::ParseError, "hierarchy input has no leaf rows");
  const int R = static_cast<int>(leaf_paths.front().size());
  Hierarchy h(R);
  // Parent recorded at first appearance, keyed by (level, index).
  std::vector<std::vector<int>> seen_parent(static_cast<std::size_t>(R));
  for (const auto& row : leaf_paths) {
    if (static_cast<int>(row.size()) != R)
      throw Error(Errc::ParseError, "leaf row width differs from header");
    NodeId prev{};
    for (int r = 1; r <= R; ++r) {
      const std::string& lab = row[static_cast<std::size_t>(r - 1)];
      if (lab.empty())
        throw Error(Errc::ParseError, "empty label at level " + std::to_string(r));
      int idx = h.index_of(r, lab);
      if (idx == 0) {
        idx = h.add_node(r, lab).index;
        if (r > 1) h.link(prev, NodeId{r, idx});
        seen_parent[static_cast<std::size_t>(r - 1)].push_back(prev.index);
      } else {
        // Existing node: the path must agree with the recorded parent.
        // A second parent is a MultiParent violation; an identical full
        // path re-listing a leaf is a duplicate row.
        if (r > 1) {
          const int recorded =
              seen_parent[static_cast<std::size_t>(r - 1)][static_cast<std::size_t>(idx - 1)];
          if (recorded != prev.index)
            throw Error(Errc::MultiParent,
                        "node " + lab + " at level " + std::to_string(r) +
                            " listed under parents " +
                            h.label(NodeId{r - 1, recorded}) + " and " + h.label(prev));
        }
        if (r == R)
          throw Error(Errc::DuplicateLeaf, "duplicate leaf row for " + lab);
      }
      prev = NodeId{r, idx};
    }
  }
  h.validate();
  return h;
}

Hierarchy Hierarchy::from_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    const std::string expected = "level_" + std::to_string(i + 1);
    if (t.header[i] != expected)
      throw Error(Errc::ParseError, path + ": expected header column '" + expected +
                                        "', found '" + t.header[i] + "'");
  }
  return from_rows(t.rows);
}

int Hierarchy::level_size(int level) const {
  if (level < 1 || level > num_levels_)
    throw Error(Errc::InvalidArgument, "level out of range: " + std::to_string(level));
  return static_cast<int>(labels_[static_cast<std::size_t>(level - 1)].size());
}

const std::string& Hierarchy::label(NodeId id) const {
  check_node(id);
  return labels_[static_cast<std::size_t>(id.level - 1)]
                [static_cast<std::size_t>(id.index - 1)];
}

int Hierarchy::index_of(int level, const std::string& label) const {
  if (level < 1 || level > num_levels_)
    throw Error(Errc::InvalidArgument, "level out of range");
  const auto& index = by_label_[static_cast<std::size_t>(level - 1)];
  auto it = index.find(label);
  return it == index.end() ? 0 : it->second;
}

void Hierarchy::require_validated() const {
  if (!validated_)
    throw Error(Errc::InvalidArgument, "hierarchy not validated");
}

NodeId Hierarchy::parent_of(NodeId id) const {
  require_validated();
  check_node(id);
  if (id.level == 1)
    throw Error(Errc::InvalidArgument, "top-level node has no parent");
  return NodeId{id.level - 1, parent_[static_cast<std::size_t>(id.level - 1)]
                                     [static_cast<std::size_t>(id.index - 1)]};
}

const std::vector<int>& Hierarchy::children_of(NodeId id) const {
  require_validated();
  check_node(id);
  if (id.level == num_levels_) {
    static const std::vector<int> kEmpty;
    return kEmpty;
  }
  return children_[static_cast<std::size_t>(id.level - 1)]
                  [static_cast<std::size_t>(id.index - 1)];
}

std::vector<NodeId> Hierarchy::leaf_path(NodeId leaf) const {
  require_validated();
  check_node(leaf);
  if (leaf.level != num_levels_)
    throw Error(Errc::NotALeaf, "node " + label(leaf) + " is at level " +
                                    std::to_string(leaf.level) + ", not " +
                                    std::to_string(num_levels_));
  std::vector<NodeId> path(static_cast<std::size_t>(num_levels_));
  NodeId cur = leaf;
  for (int r = num_levels_; r >= 1; --r) {
    path[static_cast<std::size_t>(r - 1)] = cur;
    if (r > 1) cur = parent_of(cur);
  }
  return path;
}

int Hierarchy::ancestor_at(int leaf_index, int level) const {
  require_validated();
  NodeId cur{num_levels_, leaf_index};
  while (cur.level > level) cur = parent_of(cur);
  return cur.index;
}

}  // namespace hiercat
