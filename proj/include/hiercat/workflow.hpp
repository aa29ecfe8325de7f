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

#ifndef HIERCAT_WORKFLOW_HPP_
#define HIERCAT_WORKFLOW_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "hiercat/dataset.hpp"
#include "hiercat/glm.hpp"
#include "hiercat/hierarchy.hpp"
#include "hiercat/nnet.hpp"
#include "hiercat/reducer.hpp"

namespace hiercat {

// The real-data workflow: stratified split, covariate standardisation fitted
// on the training part, embedding training, one reduction per SI* grid
// value, and a GLM comparison table of the original grouping against every
// reduced one.
struct EvaluateConfig {
  Family family = Family::gaussian;
  std::vector<double> grid = {0.1, 0.3, 0.5, 0.7};
  double train_frac = 0.8;  // 1.0 disables the test split (and RMSE)
  int stratum_level = 0;    // 0 = most granular level
  std::uint64_t seed = 1;
  NetConfig net;
  bool standardize = true;
};

struct EvaluateRow {
  std::string label;
  bool is_original = false;
  double si_star = 0;
  int n_groups = 0;
  double aic = 0;
  double bic = 0;
  double rmse = 0;
  bool has_rmse = false;
};

struct EvaluateReport {
  std::vector<EvaluateRow> rows;  // original h first, then the grid in order
  int best_aic = -1;
  int best_bic = -1;
  bool has_test = false;
  std::vector<std::pair<double, ReduceResult>> reductions;
};

EvaluateReport run_evaluate(const Hierarchy& h, const Dataset& d,
                            const EvaluateConfig& config);

// model,si_star,n_groups,aic,bic[,rmse]; the minimum AIC/BIC rows are marked.
std::string evaluate_report_csv(const EvaluateReport& report);

}  // namespace hiercat

#endif  // HIERCAT_WORKFLOW_HPP_
