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

#ifndef HIERCAT_SIMGEN_HPP_
#define HIERCAT_SIMGEN_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hiercat/dataset.hpp"
#include "hiercat/glm.hpp"
#include "hiercat/hierarchy.hpp"
#include "hiercat/nnet.hpp"
#include "hiercat/reducer.hpp"
#include "hiercat/rng.hpp"

namespace hiercat {

enum class EffectScenario { none, h_only, h_and_x };

// Generator settings for one simulated dataset. Parameter defaults follow
// the named scenario; override after construction to depart from them.
struct SimConfig {
  EffectScenario effects = EffectScenario::h_only;
  Family family = Family::gaussian;
  int per_leaf = 1000;  // balanced design
  bool unbalanced = false;
  int per_leaf_lo = 50;  // uniform integer range, inclusive, when unbalanced
  int per_leaf_hi = 100;
  double sigma = 1.5;  // Gaussian noise sd
  std::uint64_t seed = 1;
  double mu = 0;
  std::array<double, 5> gamma{};  // gamma_1..gamma_5
  std::array<double, 3> beta_x{};
};

SimConfig make_sim_config(EffectScenario effects, Family family);

// The fixed 3-level simulation hierarchy (5 / 20 / 86 classes) and the
// reduced representations it encodes: sizes (2, 4, 5) when the hierarchical
// variable affects the response, a single fully collapsed class when not.
struct SimHierarchy {
  Hierarchy hierarchy;
  ReducedHierarchy truth_effect;
  ReducedHierarchy truth_none;
};

SimHierarchy build_sim_hierarchy();

// The per-leaf linear-predictor contribution of the hierarchical variable,
// assembled from sum-to-zero indicator rows over every sibling set.
double leaf_effect(const SimConfig& config, const Hierarchy& h, int leaf_index);

// Columns x1 = sin(U(0,5)), x2 ~ N(0,1), x3 = U(1,2)^2.
Eigen::MatrixXd gen_covariates(int n, Rng& rng);

// Response draws with conditional mean g^{-1}(mu + effect(h) + beta_x x').
Eigen::VectorXd gen_response(const SimConfig& config, const Hierarchy& h,
                             const std::vector<int>& leaves, const Eigen::MatrixXd& x,
                             Rng& rng);

// One full dataset: per-leaf counts (fixed or uniform in the configured
// range), covariates, responses. Deterministic given config.seed.
Dataset simulate_dataset(const SimConfig& config, const SimHierarchy& sim);

struct ExperimentConfig {
  SimConfig sim;
  int replicates = 20;
  std::vector<std::uint64_t> init_seeds = {1, 2};
  double si_star = 0.7;
  NetConfig net;
  bool with_test = true;  // simulate a fresh dataset for out-of-sample RMSE
};

struct RunRow {
  int replicate = 0;
  std::uint64_t init_seed = 0;
  bool retrieved = false;
  std::string signature;
  int reduced_levels = 0;
  std::vector<int> reduced_counts;
  int groups = 0;
  double aic_h = 0, aic_red = 0;
  double bic_h = 0, bic_red = 0;
  double rmse_h = 0, rmse_red = 0;
};

struct ExperimentReport {
  std::vector<RunRow> rows;
  double retrieval_rate = 0;
  int distinct_structures = 0;
  double aic_win_rate = 0;
  double bic_win_rate = 0;
  double rmse_win_rate = 0;
};

// Per replicate x initialisation seed: simulate, train, aggregate, reduce,
// and compare GLMs on the original vs reduced leaf grouping against the
// encoded true structure. Replicates run in parallel; each owns an RNG
// stream derived from (seed, replicate, init index), so the report is
// independent of the worker count.
ExperimentReport run_experiment(const ExperimentConfig& config);

std::string experiment_report_csv(const ExperimentReport& report);
std::string experiment_report_json(const ExperimentReport& report);

const char* scenario_name(EffectScenario s);
const char* family_name(Family f);

}  // namespace hiercat

#endif  // HIERCAT_SIMGEN_HPP_
