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

#ifndef HIERCAT_GLM_HPP_
#define HIERCAT_GLM_HPP_

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "hiercat/common.hpp"
#include "hiercat/dataset.hpp"
#include "hiercat/hierarchy.hpp"

namespace hiercat {

enum class Family { gaussian, poisson };

struct DesignMatrix {
  Eigen::MatrixXd X;
  std::vector<std::string> names;
};

struct GlmFit {
  Family family = Family::gaussian;
  Eigen::VectorXd beta;
  std::vector<std::string> names;
  double log_likelihood = 0;
  int k_params = 0;  // coefficient count, +1 for the Gaussian sigma^2
  double aic = 0;
  double bic = 0;
  double dispersion = 0;  // Gaussian MLE sigma^2; 1 for Poisson
  int n = 0;
};

// Sum-to-zero indicator row for one sibling set: entry k is 1 when `value`
// is the k-th non-last sibling, all entries are -1 for the last sibling,
// zero otherwise. Length dim(siblings) - 1. NotASibling when value is not
// in the set.
Eigen::RowVectorXd effect_code(const std::vector<NodeId>& siblings, NodeId value);

// Dummy coding of a leaf grouping. Groups are the distinct values of
// `leaf_group` observed in the data; the smallest group id (first created)
// is the reference.
struct GroupCoding {
  std::vector<int> group_ids;  // ascending, including the reference
  int reference = 0;
};

GroupCoding make_group_coding(const Dataset& d, const std::vector<int>& leaf_group);

// Intercept + covariates + one dummy column per non-reference group.
// leaf_group maps 1-based leaf index -> group id and must cover every
// observed leaf (UnmappedLeaf otherwise; also raised when a group is
// missing from the coding).
DesignMatrix grouped_design(const Dataset& d, const std::vector<int>& leaf_group,
                            const GroupCoding& coding);

// Gaussian: least squares with MLE dispersion and exact normal
// log-likelihood. Poisson: IRLS with log link, converged when the largest
// coefficient change drops below 1e-10 (50 iterations max). The design must
// have full column rank; offending columns are named otherwise.
GlmFit fit_glm(Family family, const Eigen::VectorXd& y, const DesignMatrix& design);

Eigen::VectorXd predict(const GlmFit& fit, const DesignMatrix& design);

double rmse(const GlmFit& fit, const Eigen::VectorXd& y_test, const DesignMatrix& design_test);

}  // namespace hiercat

#endif  // HIERCAT_GLM_HPP_
