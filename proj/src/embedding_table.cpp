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

#include "hiercat/embedding_table.hpp"

#include <fstream>

#include "hiercat/csv.hpp"

namespace hiercat {

EmbeddingTable::EmbeddingTable(int q_e, const Hierarchy& h) : q_e_(q_e) {
  if (q_e < 1) throw Error(Errc::InvalidArgument, "q_e must be positive");
  const int R = h.num_levels();
  levels_.reserve(static_cast<std::size_t>(R));
  present_.reserve(static_cast<std::size_t>(R));
  for (int r = 1; r <= R; ++r) {
    levels_.emplace_back(Eigen::MatrixXd::Zero(q_e, h.level_size(r)));
    present_.emplace_back(static_cast<std::size_t>(h.level_size(r)), 0);
  }
}

void EmbeddingTable::set(NodeId id, const Eigen::VectorXd& v) {
  if (v.size() != q_e_)
    throw Error(Errc::DimensionMismatch, "vector length " + std::to_string(v.size()) +
                                             ", table q_e " + std::to_string(q_e_));
  if (!v.allFinite())
    throw Error(Errc::NonFiniteEmbedding, "embedding for " + std::to_string(id.level) +
                                              "/" + std::to_string(id.index) +
                                              " has non-finite entries");
  levels_[static_cast<std::size_t>(id.level - 1)].col(id.index - 1) = v;
  present_[static_cast<std::size_t>(id.level - 1)][static_cast<std::size_t>(id.index - 1)] = 1;
}

Eigen::VectorXd EmbeddingTable::get(NodeId id) const {
  if (!has(id))
    throw Error(Errc::MissingLeaf, "no embedding stored for level " +
                                       std::to_string(id.level) + " index " +
                                       std::to_string(id.index));
  return levels_[static_cast<std::size_t>(id.level - 1)].col(id.index - 1);
}

bool EmbeddingTable::has(NodeId id) const {
  return present_[static_cast<std::size_t>(id.level - 1)]
                 [static_cast<std::size_t>(id.index - 1)] != 0;
}

bool EmbeddingTable::level_covered(int level) const {
  for (char c : present_[static_cast<std::size_t>(level - 1)])
    if (!c) return false;
  return true;
}

const Eigen::MatrixXd& EmbeddingTable::level_matrix(int level) const {
  return levels_[static_cast<std::size_t>(level - 1)];
}

EmbeddingTable aggregate_up(const EmbeddingTable& leaf_table, const Hierarchy& h) {
  const int R = h.num_levels();
  if (!leaf_table.level_covered(R))
    throw Error(Errc::MissingLeaf, "leaf level is not fully covered");
  EmbeddingTable out(leaf_table.q_e(), h);
  for (int s = 1; s <= h.level_size(R); ++s)
    out.set(NodeId{R, s}, leaf_table.get(NodeId{R, s}));
  for (int r = R - 1; r >= 1; --r) {
    for (int s = 1; s <= h.level_size(r); ++s) {
      const auto& children = h.children_of(NodeId{r, s});
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(leaf_table.q_e());
      for (int c : children) sum += out.get(NodeId{r + 1, c});
      out.set(NodeId{r, s}, sum / static_cast<double>(children.size()));
    }
  }
  return out;
}

void write_embedding_csv(const std::string& path, const EmbeddingTable& table,
                         const Hierarchy& h) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path);
  out << "level,index,label";
  for (int u = 1; u <= table.q_e(); ++u) out << ",dim_" << u;
  out << '\n';
  for (int r = 1; r <= h.num_levels(); ++r) {
    for (int s = 1; s <= h.level_size(r); ++s) {
      const NodeId id{r, s};
      if (!table.has(id)) continue;
      out << r << ',' << s << ',' << csv_quote(h.label(id));
      const Eigen::VectorXd v = table.get(id);
      for (int u = 0; u < table.q_e(); ++u) out << ',' << fmt_double(v(u));
      out << '\n';
    }
  }
}

EmbeddingTable read_embedding_csv(const std::string& path, const Hierarchy& h) {
  CsvTable t = read_csv(path);
  if (t.header.size() < 4 || t.header[0] != "level" || t.header[1] != "index" ||
      t.header[2] != "label")
    throw Error(Errc::ParseError, path + ": expected header level,index,label,dim_*");
  const int q_e = static_cast<int>(t.header.size()) - 3;
  EmbeddingTable table(q_e, h);
  for (const auto& row : t.rows) {
    const int level = static_cast<int>(parse_double(row[0], path + " level"));
    const int index = static_cast<int>(parse_double(row[1], path + " index"));
    Eigen::VectorXd v(q_e);
    for (int u = 0; u < q_e; ++u)
      v(u) = parse_double(row[static_cast<std::size_t>(3 + u)], path + " dim");
    table.set(NodeId{level, index}, v);
  }
  return table;
}

}  // namespace hiercat
