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

#include "hiercat/glm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hiercat {
namespace {

// Full-rank check via column-pivoted QR; reports the columns that were
// pivoted out so the caller can see which group or covariate aliased.
void require_full_rank(const DesignMatrix& design) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.X);
  qr.setThreshold(1e-10);
  const auto rank = qr.rank();
  if (rank < design.X.cols()) {
    const auto& perm = qr.colsPermutation().indices();
    std::string offending;
    for (Eigen::Index i = rank; i < design.X.cols(); ++i) {
      if (!offending.empty()) offending += ", ";
      offending += design.names[static_cast<std::size_t>(perm(i))];
    }
    throw Error(Errc::RankDeficient, "design matrix is rank deficient; aliased columns: " + offending);
  }
}

GlmFit fit_gaussian(const Eigen::VectorXd& y, const DesignMatrix& design) {
  const auto n = y.size();
  GlmFit fit;
  fit.family = Family::gaussian;
  fit.names = design.names;
  fit.n = static_cast<int>(n);
  fit.beta = design.X.colPivHouseholderQr().solve(y);
  const double rss = (y - design.X * fit.beta).squaredNorm();
  const double scale = 1.0 + y.squaredNorm() / static_cast<double>(n);
  if (rss < 1e-12 * scale)
    throw Error(Errc::DegenerateFit,
                "residual sum of squares is zero; the Gaussian likelihood is unbounded");
  fit.dispersion = rss / static_cast<double>(n);
  fit.log_likelihood = -0.5 * static_cast<double>(n) *
                       (std::log(2.0 * std::numbers::pi * fit.dispersion) + 1.0);
  fit.k_params = static_cast<int>(design.X.cols()) + 1;  // + sigma^2
  return fit;
}

GlmFit fit_poisson(const Eigen::VectorXd& y, const DesignMatrix& design) {
  const auto n = y.size();
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(y(i) >= 0) || y(i) != std::floor(y(i)))
      throw Error(Errc::InvalidArgument, "poisson fit needs nonnegative integer responses");

  const auto p = design.X.cols();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  constexpr int kMaxIter = 50;
  constexpr double kTol = 1e-10;
  bool converged = false;
  for (int it = 0; it < kMaxIter; ++it) {
    Eigen::VectorXd eta = (design.X * beta).cwiseMax(-30.0).cwiseMin(30.0);
    Eigen::VectorXd mu = eta.array().exp();
    // Weighted least squares on the working response z = eta + (y - mu)/mu.
    Eigen::VectorXd z = eta + (y - mu).cwiseQuotient(mu);
    Eigen::MatrixXd xtw = design.X.transpose() * mu.asDiagonal();
    Eigen::MatrixXd hessian = xtw * design.X;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
    if (ldlt.info() != Eigen::Success)
      throw Error(Errc::IrlsDiverged, "weighted normal equations are singular");
    Eigen::VectorXd next = ldlt.solve(xtw * z);
    if (!next.allFinite())
      throw Error(Errc::IrlsDiverged, "IRLS produced non-finite coefficients");
    const double delta = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    if (delta < kTol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw Error(Errc::IrlsDiverged, "IRLS did not converge within 50 iterations");

  GlmFit fit;
  fit.family = Family::poisson;
  fit.names = design.names;
  fit.n = static_cast<int>(n);
  fit.beta = beta;
  fit.dispersion = 1.0;
  const Eigen::VectorXd eta = design.X * beta;
  double ll = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    ll += y(i) * eta(i) - std::exp(eta(i)) - std::lgamma(y(i) + 1.0);
  fit.log_likelihood = ll;
  fit.k_params = static_cast<int>(p);
  return fit;
}

}  // namespace

Eigen::RowVectorXd effect_code(const std::vector<NodeId>& siblings, NodeId value) {
  const int dim = static_cast<int>(siblings.size());
  if (dim < 2)
    throw Error(Errc::InvalidArgument, "effect coding needs at least two siblings");
  int pos = -1;
  for (int k = 0; k < dim; ++k)
    if (siblings[static_cast<std::size_t>(k)] == value) {
      pos = k;
      break;
    }
  if (pos < 0)
    throw Error(Errc::NotASibling, "value (" + std::to_string(value.level) + "," +
                                       std::to_string(value.index) +
                                       ") is not in the sibling set");
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(dim - 1);
  if (pos == dim - 1)
    row.setConstant(-1.0);
  else
    row(pos) = 1.0;
  return row;
}

GroupCoding make_group_coding(const Dataset& d, const std::vector<int>& leaf_group) {
  GroupCoding coding;
  for (int i = 0; i < d.n(); ++i) {
    const int leaf = d.leaf[static_cast<std::size_t>(i)];
    if (leaf < 1 || leaf > static_cast<int>(leaf_group.size()))
      throw Error(Errc::UnmappedLeaf, "leaf index " + std::to_string(leaf) +
                                          " is outside the grouping table");
    const int g = leaf_group[static_cast<std::size_t>(leaf - 1)];
    if (std::find(coding.group_ids.begin(), coding.group_ids.end(), g) ==
        coding.group_ids.end())
      coding.group_ids.push_back(g);
  }
  std::sort(coding.group_ids.begin(), coding.group_ids.end());
  coding.reference = coding.group_ids.front();
  return coding;
}

DesignMatrix grouped_design(const Dataset& d, const std::vector<int>& leaf_group,
                            const GroupCoding& coding) {
  const int n = d.n();
  const int p = d.p();
  const int g_cols = static_cast<int>(coding.group_ids.size()) - 1;
  DesignMatrix design;
  design.X = Eigen::MatrixXd::Zero(n, 1 + p + g_cols);
  design.X.col(0).setOnes();
  design.names.push_back("intercept");
  for (int j = 0; j < p; ++j) {
    design.X.col(1 + j) = d.x.col(j);
    design.names.push_back(d.x_names[static_cast<std::size_t>(j)]);
  }
  std::vector<int> col_of_group;
  int col = 1 + p;
  for (int g : coding.group_ids) {
    if (g == coding.reference) {
      col_of_group.push_back(-1);
    } else {
      col_of_group.push_back(col);
      design.names.push_back("group_" + std::to_string(g));
      ++col;
    }
  }
  for (int i = 0; i < n; ++i) {
    const int leaf = d.leaf[static_cast<std::size_t>(i)];
    if (leaf < 1 || leaf > static_cast<int>(leaf_group.size()))
      throw Error(Errc::UnmappedLeaf, "leaf index " + std::to_string(leaf) +
                                          " is outside the grouping table");
    const int g = leaf_group[static_cast<std::size_t>(leaf - 1)];
    const auto it = std::lower_bound(coding.group_ids.begin(), coding.group_ids.end(), g);
    if (it == coding.group_ids.end() || *it != g)
      throw Error(Errc::UnmappedLeaf,
                  "group " + std::to_string(g) + " has no column in this design");
    const int slot = col_of_group[static_cast<std::size_t>(
        std::distance(coding.group_ids.begin(), it))];
    if (slot >= 0) design.X(i, slot) = 1.0;
  }
  return design;
}

GlmFit fit_glm(Family family, const Eigen::VectorXd& y, const DesignMatrix& design) {
  if (design.X.rows() != y.size())
    throw Error(Errc::ShapeMismatch, "design rows differ from response length");
  if (design.X.rows() <= design.X.cols())
    throw Error(Errc::InvalidArgument, "need more observations than parameters");
  require_full_rank(design);
  GlmFit fit = family == Family::gaussian ? fit_gaussian(y, design) : fit_poisson(y, design);
  fit.aic = 2.0 * fit.k_params - 2.0 * fit.log_likelihood;
  fit.bic = fit.k_params * std::log(static_cast<double>(fit.n)) - 2.0 * fit.log_likelihood;
  return fit;
}

Eigen::VectorXd predict(const GlmFit& fit, const DesignMatrix& design) {
  if (design.X.cols() != fit.beta.size())
    throw Error(Errc::ShapeMismatch, "design width differs from fitted coefficients");
  Eigen::VectorXd eta = design.X * fit.beta;
  if (fit.family == Family::poisson) return eta.array().exp();
  return eta;
}

double rmse(const GlmFit& fit, const Eigen::VectorXd& y_test, const DesignMatrix& design_test) {
  if (y_test.size() == 0) throw Error(Errc::InvalidArgument, "empty test set");
  const Eigen::VectorXd yhat = predict(fit, design_test);
  return std::sqrt((y_test - yhat).squaredNorm() / static_cast<double>(y_test.size()));
}

}  // namespace hiercat
