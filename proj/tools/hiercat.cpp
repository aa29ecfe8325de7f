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

// Command-line front end: simulate data, train embeddings, reduce a
// hierarchy, evaluate SI* grids against the original structure, and run
// whole simulation experiments. Every command writes its fully resolved
// configuration next to its outputs. Exit codes: 0 success, 2 usage error,
// 1 runtime error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hiercat/csv.hpp"
#include "hiercat/dataset.hpp"
#include "hiercat/embedding_table.hpp"
#include "hiercat/hierarchy.hpp"
#include "hiercat/nnet.hpp"
#include "hiercat/reducer.hpp"
#include "hiercat/simgen.hpp"
#include "hiercat/workflow.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace hiercat;

namespace {

struct RunDirs {
  fs::path root, outputs, trace;
};

RunDirs make_run_dirs(const std::string& out) {
  RunDirs dirs{fs::path(out), fs::path(out) / "outputs", fs::path(out) / "trace"};
  fs::create_directories(dirs.outputs);
  fs::create_directories(dirs.trace);
  return dirs;
}

void write_config(const RunDirs& dirs, const json& config) {
  write_text_file((dirs.root / "config.json").string(), config.dump(2) + "\n");
}

bool parse_scenario(const std::string& s, EffectScenario& effects, Family& family) {
  const auto dash = s.rfind('-');
  if (dash == std::string::npos) return false;
  const std::string eff = s.substr(0, dash);
  const std::string fam = s.substr(dash + 1);
  if (eff == "none")
    effects = EffectScenario::none;
  else if (eff == "h_only")
    effects = EffectScenario::h_only;
  else if (eff == "h_and_x")
    effects = EffectScenario::h_and_x;
  else
    return false;
  if (fam == "gaussian")
    family = Family::gaussian;
  else if (fam == "poisson")
    family = Family::poisson;
  else
    return false;
  return true;
}

json net_config_json(const NetConfig& nc) {
  json j;
  j["q_e"] = nc.q_e;
  j["hidden"] = nc.hidden;
  j["hidden_activation"] = nc.hidden_activation == Activation::relu
                               ? "relu"
                               : (nc.hidden_activation == Activation::tanh_act ? "tanh"
                                                                               : "identity");
  j["epochs"] = nc.epochs;
  j["batch_size"] = nc.batch_size;
  j["learning_rate"] = nc.learning_rate;
  j["lr_decay"] = nc.lr_decay;
  j["dense_init_scale"] = nc.dense_init_scale;
  j["embed_init_range"] = nc.embed_init_range;
  j["adam_beta1"] = nc.adam_beta1;
  j["adam_beta2"] = nc.adam_beta2;
  j["adam_epsilon"] = nc.adam_epsilon;
  j["seed"] = nc.seed;
  return j;
}

void add_net_options(CLI::App* cmd, NetConfig& nc) {
  cmd->add_option("--qe", nc.q_e, "Embedding dimension");
  cmd->add_option("--hidden", nc.hidden, "Hidden layer widths");
  cmd->add_option("--epochs", nc.epochs, "Training epochs");
  cmd->add_option("--batch", nc.batch_size, "Mini-batch size");
  cmd->add_option("--lr", nc.learning_rate, "Adam learning rate");
  cmd->add_option("--lr-decay", nc.lr_decay, "Per-epoch learning-rate decay");
  cmd->add_option("--dense-init-scale", nc.dense_init_scale,
                  "Multiplier on the dense-layer init bound");
  cmd->add_option("--embed-init-range", nc.embed_init_range,
                  "Embedding init range (uniform(-r, r))");
  cmd->add_option_function<std::string>(
      "--activation",
      [&nc](const std::string& v) {
        if (v == "relu") nc.hidden_activation = Activation::relu;
        else if (v == "tanh") nc.hidden_activation = Activation::tanh_act;
        else if (v == "identity") nc.hidden_activation = Activation::identity;
        else throw CLI::ValidationError("--activation", "must be relu, tanh or identity");
      },
      "Hidden activation: relu, tanh or identity");
}

Family parse_family_flag(const std::string& s) {
  if (s == "gaussian") return Family::gaussian;
  if (s == "poisson") return Family::poisson;
  throw CLI::ValidationError("--family", "must be gaussian or poisson");
}

int cmd_simulate(const std::string& scenario, int per_leaf,
                 const std::vector<int>& per_leaf_range, std::uint64_t seed,
                 const std::string& out) {
  EffectScenario effects;
  Family family;
  if (!parse_scenario(scenario, effects, family))
    throw CLI::ValidationError("--scenario",
                               "expected <none|h_only|h_and_x>-<gaussian|poisson>");
  SimConfig sc = make_sim_config(effects, family);
  sc.seed = seed;
  if (!per_leaf_range.empty()) {
    sc.unbalanced = true;
    sc.per_leaf_lo = per_leaf_range[0];
    sc.per_leaf_hi = per_leaf_range[1];
    if (sc.per_leaf_lo < 1 || sc.per_leaf_hi < sc.per_leaf_lo)
      throw CLI::ValidationError("--per-leaf-range", "needs 1 <= lo <= hi");
  } else {
    sc.per_leaf = per_leaf;
  }

  const SimHierarchy sim = build_sim_hierarchy();
  const Dataset d = simulate_dataset(sc, sim);
  const RunDirs dirs = make_run_dirs(out);

  write_dataset_csv((dirs.outputs / "dataset.csv").string(), d, sim.hierarchy);
  {
    std::string csv = "level_1,level_2,level_3\n";
    const int R = sim.hierarchy.num_levels();
    for (int s = 1; s <= sim.hierarchy.num_leaves(); ++s) {
      const auto path = sim.hierarchy.leaf_path(NodeId{R, s});
      for (int r = 0; r < R; ++r)
        csv += (r ? "," : "") + sim.hierarchy.label(path[static_cast<std::size_t>(r)]);
      csv += "\n";
    }
    write_text_file((dirs.outputs / "hierarchy.csv").string(), csv);
  }
  const ReducedHierarchy& truth =
      effects == EffectScenario::none ? sim.truth_none : sim.truth_effect;
  write_text_file((dirs.outputs / "truth.json").string(),
                  reduced_to_json(truth, sim.hierarchy));

  json cfg;
  cfg["command"] = "simulate";
  cfg["scenario"] = scenario;
  cfg["balanced"] = !sc.unbalanced;
  if (sc.unbalanced) {
    cfg["per_leaf_lo"] = sc.per_leaf_lo;
    cfg["per_leaf_hi"] = sc.per_leaf_hi;
  } else {
    cfg["per_leaf"] = sc.per_leaf;
  }
  cfg["sigma"] = sc.sigma;
  cfg["seed"] = sc.seed;
  cfg["rows"] = d.n();
  write_config(dirs, cfg);
  std::cout << "simulated " << d.n() << " observations into " << out << "\n";
  return 0;
}

int cmd_train_embed(const std::string& data_path, const std::string& hier_path,
                    const std::string& family_str, NetConfig nc, std::uint64_t seed,
                    bool standardize, const std::vector<std::string>& drop_cols,
                    const std::string& out) {
  const Family family = parse_family_flag(family_str);
  const Hierarchy h = Hierarchy::from_csv(hier_path);
  Dataset d = load_dataset_csv(data_path, h,
                               family == Family::gaussian ? ResponseKind::gaussian
                                                          : ResponseKind::poisson,
                               drop_cols);
  if (standardize && d.p() > 0) {
    std::vector<int> cols(static_cast<std::size_t>(d.p()));
    std::iota(cols.begin(), cols.end(), 0);
    d = standardize_apply(d, cols, standardize_fit(d, cols));
  }
  nc.seed = seed;
  nc.loss = family == Family::gaussian ? LossKind::mse : LossKind::poisson_deviance;
  nc.output_activation = family == Family::gaussian ? OutputActivation::identity
                                                    : OutputActivation::exponential;
  const TrainResult tr = train(nc, d, h);
  const EmbeddingTable table = aggregate_up(leaf_embeddings(tr.net, h), h);

  const RunDirs dirs = make_run_dirs(out);
  save_network((dirs.outputs / "network.json").string(), tr.net);
  write_embedding_csv((dirs.outputs / "embeddings.csv").string(), table, h);
  {
    std::string csv = "epoch,loss\n";
    for (std::size_t e = 0; e < tr.epoch_loss.size(); ++e)
      csv += std::to_string(e + 1) + "," + fmt_double(tr.epoch_loss[e]) + "\n";
    write_text_file((dirs.outputs / "loss.csv").string(), csv);
  }
  json cfg;
  cfg["command"] = "train-embed";
  cfg["data"] = data_path;
  cfg["hierarchy"] = hier_path;
  cfg["family"] = family_str;
  cfg["standardize"] = standardize;
  cfg["drop_cols"] = drop_cols;
  cfg["net"] = net_config_json(nc);
  write_config(dirs, cfg);
  std::cout << "trained " << tr.epoch_loss.size() << " epochs, final loss "
            << fmt_double(tr.epoch_loss.back()) << "\n";
  return 0;
}

int cmd_reduce(const std::string& embed_path, const std::string& hier_path,
               double si_star, std::uint64_t seed, const std::string& out) {
  if (si_star < -1.0 || si_star > 1.0)
    throw CLI::ValidationError("--si-star", "must lie in [-1,1]");
  const Hierarchy h = Hierarchy::from_csv(hier_path);
  EmbeddingTable table = read_embedding_csv(embed_path, h);
  bool full = true;
  for (int r = 1; r <= h.num_levels(); ++r)
    if (!table.level_covered(r)) full = false;
  if (!full) table = aggregate_up(table, h);

  const ReduceResult res = reduce(h, table, si_star, seed);
  const RunDirs dirs = make_run_dirs(out);
  write_text_file((dirs.outputs / "reduced.json").string(),
                  reduced_to_json(res.reduced, h));
  write_group_csv((dirs.outputs / "groups.csv").string(), res.reduced, h);
  write_text_file((dirs.trace / "trace.jsonl").string(), trace_to_jsonl(res.trace));
  json cfg;
  cfg["command"] = "reduce";
  cfg["embeddings"] = embed_path;
  cfg["hierarchy"] = hier_path;
  cfg["si_star"] = si_star;
  cfg["seed"] = seed;
  write_config(dirs, cfg);
  std::cout << "reduced to " << res.reduced.group_count() << " leaf groups over "
            << res.reduced.num_levels << " levels\n";
  return 0;
}

int cmd_sweep_si(const std::string& embed_path, const std::string& hier_path,
                 const std::vector<double>& grid, std::uint64_t seed,
                 const std::string& out) {
  for (double s : grid)
    if (s < -1.0 || s > 1.0) throw CLI::ValidationError("--grid", "values must lie in [-1,1]");
  const Hierarchy h = Hierarchy::from_csv(hier_path);
  EmbeddingTable table = read_embedding_csv(embed_path, h);
  bool full = true;
  for (int r = 1; r <= h.num_levels(); ++r)
    if (!table.level_covered(r)) full = false;
  if (!full) table = aggregate_up(table, h);

  const RunDirs dirs = make_run_dirs(out);
  std::string csv = "si_star,n_groups,num_levels,counts\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::uint64_t reduce_seed =
        Rng(seed).fork({23, static_cast<std::uint64_t>(i)}).seed();
    const ReduceResult res = reduce(h, table, grid[i], reduce_seed);
    const std::string tag = fmt_double(grid[i]);
    write_text_file((dirs.outputs / ("reduced_si_" + tag + ".json")).string(),
                    reduced_to_json(res.reduced, h));
    write_text_file((dirs.trace / ("trace_si_" + tag + ".jsonl")).string(),
                    trace_to_jsonl(res.trace));
    std::string counts;
    for (const auto& level : res.reduced.levels) {
      if (!counts.empty()) counts += "/";
      counts += std::to_string(level.size());
    }
    csv += tag + "," + std::to_string(res.reduced.group_count()) + "," +
           std::to_string(res.reduced.num_levels) + "," + counts + "\n";
  }
  write_text_file((dirs.outputs / "sweep.csv").string(), csv);
  json cfg;
  cfg["command"] = "sweep-si";
  cfg["embeddings"] = embed_path;
  cfg["hierarchy"] = hier_path;
  cfg["grid"] = grid;
  cfg["seed"] = seed;
  write_config(dirs, cfg);
  std::cout << "swept " << grid.size() << " SI* values\n";
  return 0;
}

int cmd_evaluate(const std::string& data_path, const std::string& hier_path,
                 const std::string& family_str, const std::vector<double>& grid,
                 double train_frac, int stratum_level, std::uint64_t seed, NetConfig nc,
                 bool standardize, const std::vector<std::string>& drop_cols,
                 const std::string& out) {
  for (double s : grid)
    if (s < -1.0 || s > 1.0) throw CLI::ValidationError("--grid", "values must lie in [-1,1]");
  if (!(train_frac > 0.0 && train_frac <= 1.0))
    throw CLI::ValidationError("--train-frac", "must lie in (0,1]");
  const Family family = parse_family_flag(family_str);
  const Hierarchy h = Hierarchy::from_csv(hier_path);
  const Dataset d = load_dataset_csv(data_path, h,
                                     family == Family::gaussian ? ResponseKind::gaussian
                                                                : ResponseKind::poisson,
                                     drop_cols);
  EvaluateConfig ec;
  ec.family = family;
  ec.grid = grid;
  ec.train_frac = train_frac;
  ec.stratum_level = stratum_level;
  ec.seed = seed;
  ec.net = nc;
  ec.standardize = standardize;
  if (train_frac >= 1.0)
    std::cerr << "warning: no test split, the RMSE column is omitted\n";

  const EvaluateReport report = run_evaluate(h, d, ec);
  const RunDirs dirs = make_run_dirs(out);
  write_text_file((dirs.outputs / "comparison.csv").string(), evaluate_report_csv(report));
  for (const auto& [si_star, red] : report.reductions) {
    const std::string tag = fmt_double(si_star);
    write_text_file((dirs.outputs / ("reduced_si_" + tag + ".json")).string(),
                    reduced_to_json(red.reduced, h));
    write_group_csv((dirs.outputs / ("groups_si_" + tag + ".csv")).string(), red.reduced, h);
    write_text_file((dirs.trace / ("trace_si_" + tag + ".jsonl")).string(),
                    trace_to_jsonl(red.trace));
  }
  json cfg;
  cfg["command"] = "evaluate";
  cfg["data"] = data_path;
  cfg["hierarchy"] = hier_path;
  cfg["family"] = family_str;
  cfg["grid"] = grid;
  cfg["train_frac"] = train_frac;
  cfg["stratum_level"] = stratum_level;
  cfg["seed"] = seed;
  cfg["standardize"] = standardize;
  cfg["drop_cols"] = drop_cols;
  cfg["net"] = net_config_json(ec.net);
  write_config(dirs, cfg);
  std::cout << evaluate_report_csv(report);
  return 0;
}

int cmd_experiment(const std::string& scenario, int replicates, int per_leaf,
                   const std::vector<int>& per_leaf_range, double si_star,
                   const std::vector<std::uint64_t>& init_seeds, std::uint64_t seed,
                   NetConfig nc, bool with_test, const std::string& out) {
  EffectScenario effects;
  Family family;
  if (!parse_scenario(scenario, effects, family))
    throw CLI::ValidationError("--scenario",
                               "expected <none|h_only|h_and_x>-<gaussian|poisson>");
  if (si_star < -1.0 || si_star > 1.0)
    throw CLI::ValidationError("--si-star", "must lie in [-1,1]");
  ExperimentConfig ec;
  ec.sim = make_sim_config(effects, family);
  ec.sim.seed = seed;
  if (!per_leaf_range.empty()) {
    ec.sim.unbalanced = true;
    ec.sim.per_leaf_lo = per_leaf_range[0];
    ec.sim.per_leaf_hi = per_leaf_range[1];
  } else {
    ec.sim.per_leaf = per_leaf;
  }
  ec.replicates = replicates;
  ec.init_seeds = init_seeds;
  ec.si_star = si_star;
  ec.net = nc;
  ec.with_test = with_test;

  const ExperimentReport report = run_experiment(ec);
  const RunDirs dirs = make_run_dirs(out);
  write_text_file((dirs.outputs / "report.csv").string(), experiment_report_csv(report));
  write_text_file((dirs.outputs / "report.json").string(), experiment_report_json(report));
  json cfg;
  cfg["command"] = "experiment";
  cfg["scenario"] = scenario;
  cfg["replicates"] = replicates;
  if (!per_leaf_range.empty()) {
    cfg["per_leaf_lo"] = per_leaf_range[0];
    cfg["per_leaf_hi"] = per_leaf_range[1];
  } else {
    cfg["per_leaf"] = per_leaf;
  }
  cfg["si_star"] = si_star;
  cfg["init_seeds"] = init_seeds;
  cfg["seed"] = seed;
  cfg["with_test"] = with_test;
  cfg["net"] = net_config_json(nc);
  write_config(dirs, cfg);
  std::cout << experiment_report_csv(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hiercat: reduce hierarchical categorical variables via entity embeddings"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a simulation dataset");
  std::string sim_scenario;
  int sim_per_leaf = 1000;
  std::vector<int> sim_range;
  std::uint64_t sim_seed = 1;
  std::string sim_out;
  sim->add_option("--scenario", sim_scenario, "<none|h_only|h_and_x>-<gaussian|poisson>")
      ->required();
  sim->add_option("--per-leaf", sim_per_leaf, "Observations per leaf class");
  sim->add_option("--per-leaf-range", sim_range, "Uniform per-leaf range lo hi")
      ->expected(2);
  sim->add_option("--seed", sim_seed, "Generator seed");
  sim->add_option("--out", sim_out, "Output directory")->required();

  // train-embed
  auto* te = app.add_subcommand("train-embed", "Train the embedding network");
  std::string te_data, te_hier, te_family = "gaussian", te_out;
  NetConfig te_net;
  std::uint64_t te_seed = 1;
  bool te_standardize = false;
  std::vector<std::string> te_drop;
  te->add_option("--data", te_data, "Dataset CSV")->required();
  te->add_option("--hierarchy", te_hier, "Hierarchy CSV")->required();
  te->add_option("--family", te_family, "gaussian|poisson");
  add_net_options(te, te_net);
  te->add_option("--seed", te_seed, "Initialisation seed");
  te->add_flag("--standardize", te_standardize, "Standardize covariates");
  te->add_option("--drop-cols", te_drop, "Covariate columns to drop")->delimiter(',');
  te->add_option("--out", te_out, "Output directory")->required();

  // reduce
  auto* red = app.add_subcommand("reduce", "Reduce a hierarchy from embeddings");
  std::string red_embed, red_hier, red_out;
  double red_si = 0.7;
  std::uint64_t red_seed = 1;
  red->add_option("--embeddings", red_embed, "Embedding CSV")->required();
  red->add_option("--hierarchy", red_hier, "Hierarchy CSV")->required();
  red->add_option("--si-star", red_si, "Silhouette threshold SI*")->required();
  red->add_option("--seed", red_seed, "Seed");
  red->add_option("--out", red_out, "Output directory")->required();

  // sweep-si
  auto* sw = app.add_subcommand("sweep-si", "Reduce over a grid of SI* values");
  std::string sw_embed, sw_hier, sw_out;
  std::vector<double> sw_grid = {0.1, 0.3, 0.5, 0.7};
  std::uint64_t sw_seed = 1;
  sw->add_option("--embeddings", sw_embed, "Embedding CSV")->required();
  sw->add_option("--hierarchy", sw_hier, "Hierarchy CSV")->required();
  sw->add_option("--grid", sw_grid, "SI* grid values")->delimiter(',');
  sw->add_option("--seed", sw_seed, "Seed");
  sw->add_option("--out", sw_out, "Output directory")->required();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Compare SI* grid against the original hierarchy");
  std::string ev_data, ev_hier, ev_family = "gaussian", ev_out;
  std::vector<double> ev_grid = {0.1, 0.3, 0.5, 0.7};
  double ev_frac = 0.8;
  int ev_stratum = 0;
  std::uint64_t ev_seed = 1;
  NetConfig ev_net;
  bool ev_no_standardize = false;
  std::vector<std::string> ev_drop;
  ev->add_option("--data", ev_data, "Dataset CSV")->required();
  ev->add_option("--hierarchy", ev_hier, "Hierarchy CSV")->required();
  ev->add_option("--family", ev_family, "gaussian|poisson");
  ev->add_option("--grid", ev_grid, "SI* grid values")->delimiter(',');
  ev->add_option("--train-frac", ev_frac, "Training fraction (1 = no test split)");
  ev->add_option("--stratum-level", ev_stratum, "Stratification level (0 = leaf level)");
  ev->add_option("--seed", ev_seed, "Seed");
  add_net_options(ev, ev_net);
  ev->add_flag("--no-standardize", ev_no_standardize, "Skip covariate standardization");
  ev->add_option("--drop-cols", ev_drop, "Covariate columns to drop")->delimiter(',');
  ev->add_option("--out", ev_out, "Output directory")->required();

  // experiment
  auto* ex = app.add_subcommand("experiment", "Run a simulation experiment");
  std::string ex_scenario, ex_out;
  int ex_reps = 20, ex_per_leaf = 200;
  std::vector<int> ex_range;
  double ex_si = 0.7;
  std::vector<std::uint64_t> ex_seeds = {1, 2};
  std::uint64_t ex_seed = 1;
  NetConfig ex_net;
  bool ex_no_test = false;
  ex->add_option("--scenario", ex_scenario, "<none|h_only|h_and_x>-<gaussian|poisson>")
      ->required();
  ex->add_option("--replicates", ex_reps, "Dataset replicates");
  ex->add_option("--per-leaf", ex_per_leaf, "Observations per leaf class");
  ex->add_option("--per-leaf-range", ex_range, "Uniform per-leaf range lo hi")->expected(2);
  ex->add_option("--si-star", ex_si, "Silhouette threshold SI*");
  ex->add_option("--seeds", ex_seeds, "Network initialisation seeds")->delimiter(',');
  ex->add_option("--seed", ex_seed, "Data master seed");
  add_net_options(ex, ex_net);
  ex->add_flag("--no-test", ex_no_test, "Skip the out-of-sample RMSE comparison");
  ex->add_option("--out", ex_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*sim)
      return cmd_simulate(sim_scenario, sim_per_leaf, sim_range, sim_seed, sim_out);
    if (*te)
      return cmd_train_embed(te_data, te_hier, te_family, te_net, te_seed, te_standardize,
                             te_drop, te_out);
    if (*red) return cmd_reduce(red_embed, red_hier, red_si, red_seed, red_out);
    if (*sw) return cmd_sweep_si(sw_embed, sw_hier, sw_grid, sw_seed, sw_out);
    if (*ev)
      return cmd_evaluate(ev_data, ev_hier, ev_family, ev_grid, ev_frac, ev_stratum,
                          ev_seed, ev_net, !ev_no_standardize, ev_drop, ev_out);
    if (*ex)
      return cmd_experiment(ex_scenario, ex_reps, ex_per_leaf, ex_range, ex_si, ex_seeds,
                            ex_seed, ex_net, !ex_no_test, ex_out);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
