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

#ifndef HIERCAT_DATASET_HPP_
#define HIERCAT_DATASET_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hiercat/common.hpp"
#include "hiercat/hierarchy.hpp"

namespace hiercat {

enum class ResponseKind { gaussian, poisson };

// Observations bound to a hierarchy: response, leaf class at the most
// granular level, and a fixed-width numeric covariate vector per row.
// Immutable after load; splits produce new datasets.
struct Dataset {
  Eigen::VectorXd y;
  std::vector<int> leaf;  // 1-based index into level R of the bound hierarchy
  Eigen::MatrixXd x;      // n x p
  std::vector<std::string> x_names;
  ResponseKind kind = ResponseKind::gaussian;

  int n() const { return static_cast<int>(y.size()); }
  int p() const { return static_cast<int>(x.cols()); }
  Dataset subset(const std::vector<int>& rows) const;
};

// Checks leaf indices against the hierarchy and, for a Poisson response,
// that y holds nonnegative integers.
void validate_dataset(const Dataset& d, const Hierarchy& h);

// CSV with header; required columns `y` and `h_leaf`, every other column is
// a numeric covariate. Columns named in drop_cols are discarded before
// parsing, which is the supported way to handle covariates with missing
// values.
Dataset load_dataset_csv(const std::string& path, const Hierarchy& h,
                         ResponseKind kind,
                         const std::vector<std::string>& drop_cols = {});

void write_dataset_csv(const std::string& path, const Dataset& d, const Hierarchy& h);

// Indicator vector of length n_R with a single 1 at the leaf's position.
Eigen::VectorXd one_hot(NodeId leaf, const Hierarchy& h);

struct ColumnStats {
  double mean = 0;
  double sd = 1;
};

// Per-column mean and sample sd (n-1 denominator) for the selected
// covariate columns. ZeroVariance when a column is constant.
std::vector<ColumnStats> standardize_fit(const Dataset& d, const std::vector<int>& cols);

// Applies (x - mean) / sd. Stats computed on one dataset (train) can be
// re-applied verbatim to another (test).
Dataset standardize_apply(const Dataset& d, const std::vector<int>& cols,
                          const std::vector<ColumnStats>& stats);

// Splits within each class at `stratum_level`: round(frac * count) rows go
// to train, at least one when the class has any. The result is a partition
// of d; deterministic given seed.
std::pair<Dataset, Dataset> stratified_split(const Dataset& d, const Hierarchy& h,
                                             double frac_train, int stratum_level,
                                             std::uint64_t seed);

}  // namespace hiercat

#endif  // HIERCAT_DATASET_HPP_
