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

#include "hiercat/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "hiercat/csv.hpp"
#include "hiercat/embedding_table.hpp"
#include "hiercat/parallel.hpp"

namespace hiercat {
namespace {

using json = nlohmann::ordered_json;

// Child counts of the fixed simulation hierarchy. Each of the five
// top-level classes has four children; at the third level the classes under
// the second-level classes 5 and 6 come in sevens, all others in fours,
// giving 86 leaves.
constexpr int kLevel1 = 5;
constexpr std::array<int, 20> kLevel3Counts = {4, 4, 4, 4, 7, 7, 4, 4, 4, 4,
                                               4, 4, 4, 4, 4, 4, 4, 4, 4, 4};

std::string class_label(int level, int index) {
  return "c" + std::to_string(level) + "_" + std::to_string(index);
}

// Effect-coding coefficients per sibling set. The indicator over the five
// top classes carries (g1, g1, -2/3 g1, -2/3 g1); the second-level sets
// under the first four parents carry (g2, g2, -g2) or (g3, g3, -g3); at the
// third level the descendants of second-level classes 1, 2, 5, 6 load on
// g4 and those of classes 9, 10, 13, 14 on g5. Sets not listed carry zero.
struct CoefficientMap {
  Eigen::RowVectorXd top;                      // length 4
  std::vector<Eigen::RowVectorXd> level2;      // per level-1 parent, length 3
  std::vector<Eigen::RowVectorXd> level3;      // per level-2 parent
};

CoefficientMap coefficient_map(const SimConfig& c) {
  CoefficientMap m;
  const double g1 = c.gamma[0], g2 = c.gamma[1], g3 = c.gamma[2];
  const double g4 = c.gamma[3], g5 = c.gamma[4];
  m.top.resize(4);
  m.top << g1, g1, -2.0 / 3.0 * g1, -2.0 / 3.0 * g1;
  auto triple = [](double v, double last) {
    Eigen::RowVectorXd r(3);
    r << v, v, last;
    return r;
  };
  m.level2 = {triple(g2, -g2), triple(g2, -g2), triple(g3, -g3), triple(g3, -g3),
              Eigen::RowVectorXd::Zero(3)};
  m.level3.resize(20);
  for (int p = 0; p < 20; ++p)
    m.level3[static_cast<std::size_t>(p)] =
        Eigen::RowVectorXd::Zero(kLevel3Counts[static_cast<std::size_t>(p)] - 1);
  auto fill = [&](int p, double v) {
    m.level3[static_cast<std::size_t>(p)].setConstant(v);
  };
  fill(0, g4);
  fill(1, g4);
  fill(4, g4);
  fill(5, g4);
  fill(8, g5);
  fill(9, g5);
  fill(12, g5);
  fill(13, g5);
  return m;
}

std::vector<NodeId> sibling_nodes(int level, int first, int count) {
  std::vector<NodeId> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(NodeId{level, first + i});
  return out;
}

}  // namespace

const char* scenario_name(EffectScenario s) {
  switch (s) {
    case EffectScenario::none: return "none";
    case EffectScenario::h_only: return "h_only";
    case EffectScenario::h_and_x: return "h_and_x";
  }
  return "none";
}

const char* family_name(Family f) {
  return f == Family::gaussian ? "gaussian" : "poisson";
}

SimConfig make_sim_config(EffectScenario effects, Family family) {
  SimConfig c;
  c.effects = effects;
  c.family = family;
  c.mu = family == Family::gaussian ? 20.0 : 0.0;
  if (effects != EffectScenario::none) c.gamma = {0.6, 0.4, 0.3, 0.3, 0.2};
  if (effects == EffectScenario::h_and_x) c.beta_x = {6.0, 0.8, 0.5};
  return c;
}

SimHierarchy build_sim_hierarchy() {
  std::vector<std::vector<std::string>> rows;
  int l2 = 0, l3 = 0;
  for (int a = 1; a <= kLevel1; ++a) {
    for (int b = 0; b < 4; ++b) {
      ++l2;
      const int kids = kLevel3Counts[static_cast<std::size_t>(l2 - 1)];
      for (int cgrp = 0; cgrp < kids; ++cgrp) {
        ++l3;
        rows.push_back({class_label(1, a), class_label(2, l2), class_label(3, l3)});
      }
    }
  }
  SimHierarchy sim{Hierarchy::from_rows(rows), {}, {}};

  // True reduced representation under an effect of h: the first two top
  // classes merge, the rest collapse under the second reduced class;
  // second-level classes merge across parents by their coefficient pattern;
  // third-level descendants split between the bulk coefficient and the
  // sum-to-zero remainder of each sibling set.
  ReducedHierarchy& t = sim.truth_effect;
  auto add_class = [&t](int level, int index, std::vector<int> members, int parent) {
    ReducedClass c;
    c.id = static_cast<int>(t.classes.size());
    c.level = level;
    c.index = index;
    c.members = std::move(members);
    c.parent = parent;
    t.classes.push_back(c);
    return c.id;
  };
  const Hierarchy& h = sim.hierarchy;
  auto kids_of = [&h](int level, std::vector<int> parents, bool last_only) {
    std::vector<int> out;
    for (int p : parents) {
      const auto& kids = h.children_of(NodeId{level, p});
      if (last_only)
        out.push_back(kids.back());
      else
        out.insert(out.end(), kids.begin(), kids.end() - 1);
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  const int t1 = add_class(1, 1, {1, 2}, -1);
  const int t2 = add_class(1, 2, {3, 4, 5}, -1);
  const int g1 = add_class(2, 1, {1, 2, 5, 6}, t1);
  const int g2 = add_class(2, 2, {3, 4, 7, 8}, t1);
  const int g3 = add_class(2, 3, {9, 10, 13, 14}, t2);
  const int g4 = add_class(2, 4, {11, 12, 15, 16}, t2);
  const int s_bulk = add_class(3, 1, kids_of(2, {1, 2, 5, 6}, false), g1);
  const int s_last4 = add_class(3, 2, kids_of(2, {1, 2}, true), g1);
  const int s_last7 = add_class(3, 3, kids_of(2, {5, 6}, true), g1);
  const int s5_bulk = add_class(3, 4, kids_of(2, {9, 10, 13, 14}, false), g3);
  const int s5_last = add_class(3, 5, kids_of(2, {9, 10, 13, 14}, true), g3);
  t.num_levels = 3;
  t.levels = {{t1, t2}, {g1, g2, g3, g4}, {s_bulk, s_last4, s_last7, s5_bulk, s5_last}};
  t.children.resize(t.classes.size());
  for (const auto& c : t.classes)
    if (c.parent >= 0) t.children[static_cast<std::size_t>(c.parent)].push_back(c.id);
  t.leaf_group.assign(static_cast<std::size_t>(h.num_leaves()), -1);
  auto assign_leaves = [&t](const std::vector<int>& leaves, int id) {
    for (int s : leaves) t.leaf_group[static_cast<std::size_t>(s - 1)] = id;
  };
  for (int id : {s_bulk, s_last4, s_last7, s5_bulk, s5_last})
    assign_leaves(t.classes[static_cast<std::size_t>(id)].members, id);
  auto all_kids = [&kids_of](std::vector<int> parents) {
    std::vector<int> a = kids_of(2, parents, false);
    std::vector<int> b = kids_of(2, parents, true);
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    return a;
  };
  assign_leaves(all_kids({3, 4, 7, 8}), g2);
  assign_leaves(all_kids({11, 12, 15, 16}), g4);
  assign_leaves(all_kids({17, 18, 19, 20}), t2);

  // No effect: everything collapses into one top-level class.
  ReducedHierarchy& n = sim.truth_none;
  ReducedClass root;
  root.id = 0;
  root.level = 1;
  root.index = 1;
  root.members = {1, 2, 3, 4, 5};
  root.parent = -1;
  n.classes.push_back(root);
  n.num_levels = 1;
  n.levels = {{0}, {}, {}};
  n.children.resize(1);
  n.leaf_group.assign(static_cast<std::size_t>(h.num_leaves()), 0);
  return sim;
}

double leaf_effect(const SimConfig& config, const Hierarchy& h, int leaf_index) {
  const CoefficientMap m = coefficient_map(config);
  const auto path = h.leaf_path(NodeId{h.num_levels(), leaf_index});
  double effect =
      m.top.dot(effect_code(sibling_nodes(1, 1, h.level_size(1)), path[0]));
  // Level 2 sibling sets are the children of the level-1 parent.
  {
    const auto& kids = h.children_of(path[0]);
    std::vector<NodeId> siblings;
    for (int k : kids) siblings.push_back(NodeId{2, k});
    effect += m.level2[static_cast<std::size_t>(path[0].index - 1)].dot(
        effect_code(siblings, path[1]));
  }
  {
    const auto& kids = h.children_of(path[1]);
    std::vector<NodeId> siblings;
    for (int k : kids) siblings.push_back(NodeId{3, k});
    effect += m.level3[static_cast<std::size_t>(path[1].index - 1)].dot(
        effect_code(siblings, path[2]));
  }
  return effect;
}

Eigen::MatrixXd gen_covariates(int n, Rng& rng) {
  Eigen::MatrixXd x(n, 3);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = std::sin(rng.uniform(0.0, 5.0));
    x(i, 1) = rng.normal();
    const double a3 = rng.uniform(1.0, 2.0);
    x(i, 2) = a3 * a3;
  }
  return x;
}

Eigen::VectorXd gen_response(const SimConfig& config, const Hierarchy& h,
                             const std::vector<int>& leaves, const Eigen::MatrixXd& x,
                             Rng& rng) {
  const int n = static_cast<int>(leaves.size());
  if (x.rows() != n) throw Error(Errc::ShapeMismatch, "covariate rows differ from leaves");
  std::vector<double> effects(static_cast<std::size_t>(h.num_leaves()));
  for (int s = 1; s <= h.num_leaves(); ++s)
    effects[static_cast<std::size_t>(s - 1)] = leaf_effect(config, h, s);
  Eigen::Vector3d beta(config.beta_x[0], config.beta_x[1], config.beta_x[2]);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    const double eta = config.mu + effects[static_cast<std::size_t>(leaves[static_cast<std::size_t>(i)] - 1)] +
                       x.row(i).head(3).dot(beta);
    if (config.family == Family::gaussian)
      y(i) = rng.normal(eta, config.sigma);
    else
      y(i) = static_cast<double>(rng.poisson(std::exp(eta)));
  }
  return y;
}

Dataset simulate_dataset(const SimConfig& config, const SimHierarchy& sim) {
  const Hierarchy& h = sim.hierarchy;
  Rng master(config.seed);
  Rng counts_rng = master.fork({1});
  Rng cov_rng = master.fork({2});
  Rng resp_rng = master.fork({3});

  std::vector<int> leaves;
  for (int s = 1; s <= h.num_leaves(); ++s) {
    const int count =
        config.unbalanced
            ? static_cast<int>(counts_rng.uniform_int(config.per_leaf_lo, config.per_leaf_hi))
            : config.per_leaf;
    for (int i = 0; i < count; ++i) leaves.push_back(s);
  }
  const int n = static_cast<int>(leaves.size());
  Dataset d;
  d.kind = config.family == Family::gaussian ? ResponseKind::gaussian : ResponseKind::poisson;
  d.leaf = std::move(leaves);
  d.x = gen_covariates(n, cov_rng);
  d.x_names = {"x1", "x2", "x3"};
  d.y = gen_response(config, h, d.leaf, d.x, resp_rng);
  return d;
}

namespace {

std::vector<int> identity_grouping(int n_leaves) {
  std::vector<int> g(static_cast<std::size_t>(n_leaves));
  std::iota(g.begin(), g.end(), 0);
  return g;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  const SimHierarchy sim = build_sim_hierarchy();
  const std::string truth_sig =
      structure_signature(config.sim.effects == EffectScenario::none ? sim.truth_none
                                                                     : sim.truth_effect);
  const int n_seeds = static_cast<int>(config.init_seeds.size());
  const int n_runs = config.replicates * n_seeds;
  ExperimentReport report;
  report.rows.resize(static_cast<std::size_t>(n_runs));

  parallel_for(n_runs, [&](int run) {
    const int rep = run / n_seeds;
    const int seed_ix = run % n_seeds;
    SimConfig sc = config.sim;
    sc.seed = Rng(config.sim.seed).fork({10, static_cast<std::uint64_t>(rep)}).seed();
    const Dataset train_ds = simulate_dataset(sc, sim);

    NetConfig nc = config.net;
    nc.seed = Rng(config.init_seeds[static_cast<std::size_t>(seed_ix)])
                  .fork({11, static_cast<std::uint64_t>(rep)})
                  .seed();
    nc.loss = config.sim.family == Family::gaussian ? LossKind::mse
                                                    : LossKind::poisson_deviance;
    nc.output_activation = config.sim.family == Family::gaussian
                               ? OutputActivation::identity
                               : OutputActivation::exponential;
    const TrainResult tr = train(nc, train_ds, sim.hierarchy);
    const EmbeddingTable table =
        aggregate_up(leaf_embeddings(tr.net, sim.hierarchy), sim.hierarchy);
    const std::uint64_t reduce_seed =
        Rng(sc.seed).fork({12, nc.seed}).seed();
    const ReduceResult red = reduce(sim.hierarchy, table, config.si_star, reduce_seed);

    RunRow row;
    row.replicate = rep;
    row.init_seed = config.init_seeds[static_cast<std::size_t>(seed_ix)];
    row.signature = structure_signature(red.reduced);
    row.retrieved = row.signature == truth_sig;
    row.reduced_levels = red.reduced.num_levels;
    for (const auto& level : red.reduced.levels)
      row.reduced_counts.push_back(static_cast<int>(level.size()));
    row.groups = red.reduced.group_count();

    const Family family = config.sim.family;
    const auto full_group = identity_grouping(sim.hierarchy.num_leaves());
    const GroupCoding coding_h = make_group_coding(train_ds, full_group);
    const GroupCoding coding_red = make_group_coding(train_ds, red.reduced.leaf_group);
    const GlmFit fit_h =
        fit_glm(family, train_ds.y, grouped_design(train_ds, full_group, coding_h));
    const GlmFit fit_red =
        fit_glm(family, train_ds.y,
                grouped_design(train_ds, red.reduced.leaf_group, coding_red));
    row.aic_h = fit_h.aic;
    row.aic_red = fit_red.aic;
    row.bic_h = fit_h.bic;
    row.bic_red = fit_red.bic;
    if (config.with_test) {
      SimConfig tc = config.sim;
      tc.seed = Rng(config.sim.seed).fork({13, static_cast<std::uint64_t>(rep)}).seed();
      const Dataset test = simulate_dataset(tc, sim);
      row.rmse_h = rmse(fit_h, test.y, grouped_design(test, full_group, coding_h));
      row.rmse_red =
          rmse(fit_red, test.y, grouped_design(test, red.reduced.leaf_group, coding_red));
    }
    report.rows[static_cast<std::size_t>(run)] = std::move(row);
  });

  std::set<std::string> signatures;
  int retrieved = 0, aic_wins = 0, bic_wins = 0, rmse_wins = 0;
  for (const auto& row : report.rows) {
    signatures.insert(row.signature);
    retrieved += row.retrieved ? 1 : 0;
    aic_wins += row.aic_red < row.aic_h ? 1 : 0;
    bic_wins += row.bic_red < row.bic_h ? 1 : 0;
    rmse_wins += row.rmse_red < row.rmse_h ? 1 : 0;
  }
  const double denom = static_cast<double>(n_runs);
  report.retrieval_rate = retrieved / denom;
  report.distinct_structures = static_cast<int>(signatures.size());
  report.aic_win_rate = aic_wins / denom;
  report.bic_win_rate = bic_wins / denom;
  report.rmse_win_rate = rmse_wins / denom;
  return report;
}

std::string experiment_report_csv(const ExperimentReport& report) {
  std::string out =
      "metric,value\nretrieval_rate," + fmt_double(report.retrieval_rate) +
      "\ndistinct_structures," + std::to_string(report.distinct_structures) +
      "\naic_win_rate," + fmt_double(report.aic_win_rate) + "\nbic_win_rate," +
      fmt_double(report.bic_win_rate) + "\nrmse_win_rate," +
      fmt_double(report.rmse_win_rate) + "\n";
  return out;
}

std::string experiment_report_json(const ExperimentReport& report) {
  json j;
  j["retrieval_rate"] = report.retrieval_rate;
  j["distinct_structures"] = report.distinct_structures;
  j["aic_win_rate"] = report.aic_win_rate;
  j["bic_win_rate"] = report.bic_win_rate;
  j["rmse_win_rate"] = report.rmse_win_rate;
  json rows = json::array();
  for (const auto& r : report.rows) {
    json jr;
    jr["replicate"] = r.replicate;
    jr["init_seed"] = r.init_seed;
    jr["retrieved"] = r.retrieved;
    jr["reduced_levels"] = r.reduced_levels;
    jr["reduced_counts"] = r.reduced_counts;
    jr["groups"] = r.groups;
    jr["aic_h"] = r.aic_h;
    jr["aic_reduced"] = r.aic_red;
    jr["bic_h"] = r.bic_h;
    jr["bic_reduced"] = r.bic_red;
    jr["rmse_h"] = r.rmse_h;
    jr["rmse_reduced"] = r.rmse_red;
    rows.push_back(std::move(jr));
  }
  j["runs"] = std::move(rows);
  return j.dump(2) + "\n";
}

}  // namespace hiercat
