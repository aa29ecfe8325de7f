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

#include "hiercat/reducer.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "hiercat/clustering.hpp"
#include "hiercat/csv.hpp"

namespace hiercat {

using json = nlohmann::ordered_json;

int ReducedHierarchy::group_count() const {
  std::set<int> groups(leaf_group.begin(), leaf_group.end());
  return static_cast<int>(groups.size());
}

std::string ReducedHierarchy::class_name(int id) const {
  const ReducedClass& c = classes[static_cast<std::size_t>(id)];
  return "g" + std::to_string(c.level) + "_" + std::to_string(c.index);
}

ReduceState::ReduceState(const Hierarchy& h, const EmbeddingTable& table,
                         double si_star, std::uint64_t seed)
    : h_(h), table_(table), si_star_(si_star), seed_(seed) {
  for (int r = 1; r <= h.num_levels(); ++r)
    if (!table.level_covered(r))
      throw Error(Errc::MissingLeaf,
                  "embedding table does not cover level " + std::to_string(r));
  clusters_.resize(static_cast<std::size_t>(h.num_levels()));
  pseudos_.resize(static_cast<std::size_t>(h.num_levels()));
}

std::vector<int> ReduceState::children_union(int level, const std::vector<int>& members) const {
  std::vector<int> out;
  if (level >= h_.num_levels()) return out;
  for (int m : members) {
    const auto& kids = h_.children_of(NodeId{level, m});
    out.insert(out.end(), kids.begin(), kids.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string ReduceState::unit_name(const Unit& u) const {
  return (u.pseudo ? "f" : "g") + std::to_string(u.level) + "_" + std::to_string(u.index);
}

void ReduceState::horizontal_step(int level) {
  if (level != levels_done_ + 1)
    throw Error(Errc::InvalidArgument, "horizontal_step applied out of order");

  // Work items: at the top level a single task over H_1; below, one task
  // per cluster and per pseudocluster of the previous level, over its
  // active descendants.
  struct Task {
    Unit* owner;  // nullptr at level 1
    std::vector<int> items;
  };
  std::vector<Task> tasks;
  if (level == 1) {
    std::vector<int> all(static_cast<std::size_t>(h_.level_size(1)));
    std::iota(all.begin(), all.end(), 1);
    tasks.push_back({nullptr, std::move(all)});
  } else {
    for (auto& u : clusters_[static_cast<std::size_t>(level - 2)])
      tasks.push_back({&u, u.desc_active});
    for (auto& u : pseudos_[static_cast<std::size_t>(level - 2)])
      tasks.push_back({&u, u.desc_active});
  }

  const Eigen::MatrixXd& level_mat = table_.level_matrix(level);
  int created = 0;
  for (auto& task : tasks) {
    if (task.items.empty()) continue;
    const int j_count = static_cast<int>(task.items.size());
    Eigen::MatrixXd items(table_.q_e(), j_count);
    std::vector<long> ids(static_cast<std::size_t>(j_count));
    for (int i = 0; i < j_count; ++i) {
      items.col(i) = level_mat.col(task.items[static_cast<std::size_t>(i)] - 1);
      ids[static_cast<std::size_t>(i)] = task.items[static_cast<std::size_t>(i)];
    }
    const std::uint64_t task_seed =
        Rng(seed_)
            .fork({1, static_cast<std::uint64_t>(level),
                   static_cast<std::uint64_t>(task.owner ? task.owner->index : 0),
                   static_cast<std::uint64_t>(task.owner && task.owner->pseudo ? 1 : 0)})
            .seed();
    auto sel = cluster::select_k(items, si_star_, task_seed, &ids);

    TraceRecord rec;
    rec.step = "horizontal";
    rec.level = level;
    rec.unit = task.owner ? unit_name(*task.owner) : "root";
    for (int i = 0; i < j_count; ++i)
      rec.items.push_back(h_.label(NodeId{level, task.items[static_cast<std::size_t>(i)]}));
    rec.si_curve = sel.si_curve;
    rec.k_star = sel.solution.k;
    rec.forced_single = sel.forced_single;

    std::vector<int> new_cluster_ids;
    for (int k = 0; k < sel.solution.k; ++k) {
      Unit u;
      u.pseudo = false;
      u.level = level;
      u.index = ++created;
      for (int i = 0; i < j_count; ++i)
        if (sel.solution.assignment[static_cast<std::size_t>(i)] == k)
          u.members.push_back(task.items[static_cast<std::size_t>(i)]);
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(table_.q_e());
      for (int m : u.members) sum += level_mat.col(m - 1);
      u.embedding = sum / static_cast<double>(u.members.size());
      u.desc_all = children_union(level, u.members);
      u.flat_id = next_flat_id_++;
      if (task.owner)
        u.parent_flat = task.owner->pseudo ? task.owner->parent_flat : task.owner->flat_id;
      std::vector<std::string> labels;
      for (int m : u.members) labels.push_back(h_.label(NodeId{level, m}));
      rec.clusters.push_back(std::move(labels));
      clusters_[static_cast<std::size_t>(level - 1)].push_back(std::move(u));
    }
    trace_.push_back(std::move(rec));
  }
  levels_done_ = level;
}

void ReduceState::process_unit_vertical(Unit& unit, int level) {
  unit.desc_active = unit.desc_all;
  if (unit.desc_all.empty()) return;

  const Eigen::MatrixXd& child_mat = table_.level_matrix(level + 1);
  const int j_count = 1 + static_cast<int>(unit.desc_all.size());
  Eigen::MatrixXd items(table_.q_e(), j_count);
  std::vector<long> ids(static_cast<std::size_t>(j_count));
  items.col(0) = unit.embedding;
  ids[0] = 0;  // the parent sorts first; children keep their class index
  for (int i = 1; i < j_count; ++i) {
    items.col(i) = child_mat.col(unit.desc_all[static_cast<std::size_t>(i - 1)] - 1);
    ids[static_cast<std::size_t>(i)] = unit.desc_all[static_cast<std::size_t>(i - 1)];
  }
  const std::uint64_t task_seed =
      Rng(seed_)
          .fork({2, static_cast<std::uint64_t>(level),
                 static_cast<std::uint64_t>(unit.index),
                 static_cast<std::uint64_t>(unit.pseudo ? 1 : 0)})
          .seed();
  auto sel = cluster::select_k(items, si_star_, task_seed, &ids);

  TraceRecord rec;
  rec.step = "vertical";
  rec.level = level;
  rec.unit = unit_name(unit);
  rec.items.push_back("parent:" + unit_name(unit));
  for (int c : unit.desc_all) rec.items.push_back(h_.label(NodeId{level + 1, c}));
  rec.si_curve = sel.si_curve;
  rec.k_star = sel.solution.k;
  rec.forced_single = sel.forced_single;
  for (int k = 0; k < sel.solution.k; ++k) {
    std::vector<std::string> labels;
    for (int i = 0; i < j_count; ++i)
      if (sel.solution.assignment[static_cast<std::size_t>(i)] == k)
        labels.push_back(i == 0 ? rec.items[0]
                                : h_.label(NodeId{level + 1,
                                                  unit.desc_all[static_cast<std::size_t>(i - 1)]}));
    rec.clusters.push_back(std::move(labels));
  }

  std::vector<int> collapsed;
  if (sel.solution.k == 1) {
    // Forced single cluster: every descendant is treated as co-clustered
    // with the parent and collapses into it. The least-similar veto only
    // applies to genuine multi-cluster solutions.
    collapsed = unit.desc_all;
  } else {
    const int parent_cluster = sel.solution.assignment[0];
    std::vector<int> ep_positions;
    for (int i = 1; i < j_count; ++i)
      if (sel.solution.assignment[static_cast<std::size_t>(i)] == parent_cluster)
        ep_positions.push_back(i);
    if (!ep_positions.empty()) {
      const double parent_si = sel.solution.per_item_silhouette[0];
      double member_min = std::numeric_limits<double>::infinity();
      for (int i : ep_positions)
        member_min = std::min(member_min,
                              sel.solution.per_item_silhouette[static_cast<std::size_t>(i)]);
      if (parent_si < member_min) {
        rec.veto = true;  // parent is strictly the least similar object in E^(p)
      } else {
        for (int i : ep_positions)
          collapsed.push_back(unit.desc_all[static_cast<std::size_t>(i - 1)]);
      }
    }
  }

  if (!collapsed.empty()) {
    std::sort(collapsed.begin(), collapsed.end());
    for (int c : collapsed) rec.collapsed.push_back(h_.label(NodeId{level + 1, c}));
    Unit f;
    f.pseudo = true;
    f.level = level + 1;
    f.index = static_cast<int>(pseudos_[static_cast<std::size_t>(level)].size()) + 1;
    f.members = collapsed;
    f.embedding = unit.embedding;  // inherited, never recomputed
    f.desc_all = children_union(level + 1, collapsed);
    f.parent_flat = unit.pseudo ? unit.parent_flat : unit.flat_id;
    pseudos_[static_cast<std::size_t>(level)].push_back(std::move(f));

    std::vector<int> remaining;
    std::set_difference(unit.desc_all.begin(), unit.desc_all.end(), collapsed.begin(),
                        collapsed.end(), std::back_inserter(remaining));
    unit.desc_active = std::move(remaining);
  }
  trace_.push_back(std::move(rec));
}

void ReduceState::vertical_step(int level) {
  if (level != levels_done_)
    throw Error(Errc::InvalidArgument, "vertical_step applied out of order");
  if (level >= h_.num_levels())
    throw Error(Errc::InvalidArgument, "no level below " + std::to_string(level));
  for (auto& u : clusters_[static_cast<std::size_t>(level - 1)])
    process_unit_vertical(u, level);
  for (auto& u : pseudos_[static_cast<std::size_t>(level - 1)])
    process_unit_vertical(u, level);
}

void ReduceState::run_all() {
  for (int r = 1; r <= h_.num_levels(); ++r) {
    horizontal_step(r);
    if (r < h_.num_levels()) vertical_step(r);
  }
}

const std::vector<int>& ReduceState::active_descendants(int level, int index) const {
  for (const auto& u : clusters_[static_cast<std::size_t>(level - 1)])
    if (u.index == index) return u.desc_active;
  throw Error(Errc::InvalidArgument, "no reduced class with that index");
}

ReduceResult ReduceState::result() const {
  if (levels_done_ != h_.num_levels())
    throw Error(Errc::InvalidArgument, "reduction has not processed every level");
  ReduceResult out;
  ReducedHierarchy& rh = out.reduced;
  const int R = h_.num_levels();
  rh.levels.resize(static_cast<std::size_t>(R));
  std::size_t total = 0;
  for (const auto& level : clusters_) total += level.size();
  rh.classes.resize(total);
  rh.children.resize(total);
  for (int r = 1; r <= R; ++r) {
    for (const auto& u : clusters_[static_cast<std::size_t>(r - 1)]) {
      ReducedClass c;
      c.id = u.flat_id;
      c.level = r;
      c.index = u.index;
      c.members = u.members;
      c.parent = u.parent_flat;
      rh.classes[static_cast<std::size_t>(u.flat_id)] = std::move(c);
      rh.levels[static_cast<std::size_t>(r - 1)].push_back(u.flat_id);
      if (u.parent_flat >= 0)
        rh.children[static_cast<std::size_t>(u.parent_flat)].push_back(u.flat_id);
      rh.num_levels = r;
    }
  }
  rh.leaf_group.assign(static_cast<std::size_t>(h_.num_leaves()), -1);
  for (const auto& u : clusters_[static_cast<std::size_t>(R - 1)])
    for (int m : u.members) rh.leaf_group[static_cast<std::size_t>(m - 1)] = u.flat_id;
  for (const auto& u : pseudos_[static_cast<std::size_t>(R - 1)])
    for (int m : u.members) rh.leaf_group[static_cast<std::size_t>(m - 1)] = u.parent_flat;
  for (std::size_t i = 0; i < rh.leaf_group.size(); ++i)
    if (rh.leaf_group[i] < 0)
      throw Error(Errc::UnmappedLeaf,
                  "leaf " + std::to_string(i + 1) + " was never assigned a reduced class");
  for (int r = 1; r <= R; ++r)
    for (const auto& u : pseudos_[static_cast<std::size_t>(r - 1)]) {
      PseudoInfo info;
      info.level = r;
      info.index = u.index;
      info.members = u.members;
      info.target = u.parent_flat;
      out.pseudos.push_back(std::move(info));
    }
  out.trace = trace_;
  return out;
}

ReduceResult reduce(const Hierarchy& h, const EmbeddingTable& table, double si_star,
                    std::uint64_t seed) {
  ReduceState state(h, table, si_star, seed);
  state.run_all();
  return state.result();
}

std::string structure_signature(const ReducedHierarchy& rh) {
  const auto n_classes = rh.classes.size();
  std::vector<std::set<int>> leafset(n_classes);
  for (std::size_t leaf = 0; leaf < rh.leaf_group.size(); ++leaf)
    leafset[static_cast<std::size_t>(rh.leaf_group[leaf])].insert(static_cast<int>(leaf));
  // Children may hang multiple levels below; accumulate bottom-up over the
  // class list, which is ordered parents-before-children by construction.
  for (std::size_t i = n_classes; i-- > 0;) {
    const int parent = rh.classes[i].parent;
    if (parent >= 0)
      leafset[static_cast<std::size_t>(parent)].insert(leafset[i].begin(), leafset[i].end());
  }
  auto set_str = [](const std::set<int>& s) {
    std::string out = "{";
    for (int v : s) out += std::to_string(v) + ",";
    out += "}";
    return out;
  };
  std::string sig;
  for (std::size_t r = 0; r < rh.levels.size(); ++r) {
    std::vector<std::string> entries;
    for (int id : rh.levels[r]) {
      const int parent = rh.classes[static_cast<std::size_t>(id)].parent;
      std::string e = set_str(leafset[static_cast<std::size_t>(id)]);
      e += "<-";
      if (parent >= 0) {
        e += std::to_string(rh.classes[static_cast<std::size_t>(parent)].level) + ":" +
             set_str(leafset[static_cast<std::size_t>(parent)]);
      } else {
        e += ".";
      }
      entries.push_back(std::move(e));
    }
    std::sort(entries.begin(), entries.end());
    sig += "L" + std::to_string(r + 1) + "[";
    for (const auto& e : entries) sig += e + ";";
    sig += "]";
  }
  // Terminal groups that are not classes of their own (leaves collapsed
  // into an ancestor) are captured by the leafsets above.
  return sig;
}

std::string reduced_to_json(const ReducedHierarchy& rh, const Hierarchy& h) {
  json j;
  j["format"] = "hiercat-reduced";
  j["version"] = 1;
  j["num_levels"] = rh.num_levels;
  json classes = json::array();
  for (const auto& c : rh.classes) {
    json jc;
    jc["id"] = c.id;
    jc["name"] = rh.class_name(c.id);
    jc["level"] = c.level;
    jc["index"] = c.index;
    json members = json::array();
    for (int m : c.members) members.push_back(h.label(NodeId{c.level, m}));
    jc["members"] = std::move(members);
    if (c.parent >= 0)
      jc["parent"] = c.parent;
    else
      jc["parent"] = nullptr;
    classes.push_back(std::move(jc));
  }
  j["classes"] = std::move(classes);
  json levels = json::array();
  for (const auto& level : rh.levels) levels.push_back(level);
  j["levels"] = std::move(levels);
  json children = json::array();
  for (const auto& ch : rh.children) children.push_back(ch);
  j["children"] = std::move(children);
  json lg = json::object();
  const int R = h.num_levels();
  for (std::size_t i = 0; i < rh.leaf_group.size(); ++i)
    lg[h.label(NodeId{R, static_cast<int>(i) + 1})] = rh.leaf_group[i];
  j["leaf_group"] = std::move(lg);
  return j.dump(2) + "\n";
}

std::string trace_to_jsonl(const std::vector<TraceRecord>& trace) {
  std::string out;
  for (const auto& rec : trace) {
    json j;
    j["step"] = rec.step;
    j["level"] = rec.level;
    j["unit"] = rec.unit;
    j["items"] = rec.items;
    json curve = json::array();
    for (const auto& [k, si] : rec.si_curve) curve.push_back(json::array({k, si}));
    j["si_curve"] = std::move(curve);
    j["k_star"] = rec.k_star;
    j["forced_single"] = rec.forced_single;
    j["veto"] = rec.veto;
    j["clusters"] = rec.clusters;
    j["collapsed"] = rec.collapsed;
    out += j.dump() + "\n";
  }
  return out;
}

void write_group_csv(const std::string& path, const ReducedHierarchy& rh,
                     const Hierarchy& h) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path);
  out << "leaf,group_id,group_name\n";
  const int R = h.num_levels();
  for (std::size_t i = 0; i < rh.leaf_group.size(); ++i) {
    const int g = rh.leaf_group[i];
    out << csv_quote(h.label(NodeId{R, static_cast<int>(i) + 1})) << ',' << g << ','
        << rh.class_name(g) << '\n';
  }
}

}  // namespace hiercat
