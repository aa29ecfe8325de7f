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

#ifndef HIERCAT_EMBEDDING_TABLE_HPP_
#define HIERCAT_EMBEDDING_TABLE_HPP_

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "hiercat/common.hpp"
#include "hiercat/hierarchy.hpp"

namespace hiercat {

// Per-class embedding vectors in R^{q_e}, stored per level as a
// q_e x n_r matrix of columns. All stored values must be finite.
class EmbeddingTable {
 public:
  EmbeddingTable(int q_e, const Hierarchy& h);

  int q_e() const { return q_e_; }
  int num_levels() const { return static_cast<int>(levels_.size()); }

  void set(NodeId id, const Eigen::VectorXd& v);
  Eigen::VectorXd get(NodeId id) const;
  bool has(NodeId id) const;
  bool level_covered(int level) const;

  // q_e x n_r matrix for one level; columns of uncovered nodes are zero.
  const Eigen::MatrixXd& level_matrix(int level) const;

 private:
  int q_e_;
  std::vector<Eigen::MatrixXd> levels_;
  std::vector<std::vector<char>> present_;
};

// Extends a leaf-level table to every level by averaging children bottom-up:
// each parent vector is the arithmetic mean of its children's vectors, level
// by level, never a flat mean over descendant leaves. Leaf vectors are
// copied unchanged. MissingLeaf when a leaf has no vector.
EmbeddingTable aggregate_up(const EmbeddingTable& leaf_table, const Hierarchy& h);

// CSV with header level,index,label,dim_1..dim_qe; rows for covered nodes,
// level-major then index order.
void write_embedding_csv(const std::string& path, const EmbeddingTable& table,
                         const Hierarchy& h);
EmbeddingTable read_embedding_csv(const std::string& path, const Hierarchy& h);

}  // namespace hiercat

#endif  // HIERCAT_EMBEDDING_TABLE_HPP_
