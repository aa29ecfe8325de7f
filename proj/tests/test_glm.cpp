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

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "hiercat/glm.hpp"
#include "hiercat/rng.hpp"
#include "test_support.hpp"

using namespace hiercat;

namespace {

DesignMatrix named(Eigen::MatrixXd x) {
  DesignMatrix d;
  d.X = std::move(x);
  for (Eigen::Index c = 0; c < d.X.cols(); ++c)
    d.names.push_back("c" + std::to_string(c));
  return d;
}

std::vector<NodeId> make_siblings(int count) {
  std::vector<NodeId> s;
  for (int i = 1; i <= count; ++i) s.push_back(NodeId{2, i});
  return s;
}

// Newton ascent with halving line search on the Poisson log-likelihood;
// shares no code with the IRLS implementation.
Eigen::VectorXd poisson_newton_oracle(const Eigen::VectorXd& y, const Eigen::MatrixXd& x) {
  auto loglik = [&](const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = x * beta;
    double ll = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i)
      ll += y(i) * eta(i) - std::exp(eta(i)) - std::lgamma(y(i) + 1.0);
    return ll;
  };
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
  double current = loglik(beta);
  for (int it = 0; it < 200; ++it) {
    const Eigen::VectorXd mu = (x * beta).array().exp();
    const Eigen::VectorXd score = x.transpose() * (y - mu);
    const Eigen::MatrixXd hess = x.transpose() * mu.asDiagonal() * x;
    const Eigen::VectorXd dir = hess.ldlt().solve(score);
    double step = 1.0;
    while (step > 1e-12) {
      const Eigen::VectorXd cand = beta + step * dir;
      const double ll = loglik(cand);
      if (ll >= current - 1e-15) {
        beta = cand;
        current = ll;
        break;
      }
      step /= 2;
    }
    if ((step * dir).cwiseAbs().maxCoeff() < 1e-12) break;
  }
  return beta;
}

Dataset grouped_dataset(const Hierarchy&, const std::vector<int>& leaves, Rng& rng) {
  Dataset d;
  const int n = static_cast<int>(leaves.size());
  d.leaf = leaves;
  d.y.resize(n);
  d.x.resize(n, 1);
  d.x_names = {"x1"};
  for (int i = 0; i < n; ++i) {
    d.x(i, 0) = rng.normal();
    d.y(i) = rng.normal();
  }
  return d;
}

}  // namespace

TEST_CASE("effect coding rows") {
  const auto abc = make_siblings(3);
  Eigen::RowVectorXd row = effect_code(abc, NodeId{2, 1});
  CHECK(row == Eigen::RowVector2d(1, 0));
  row = effect_code(abc, NodeId{2, 2});
  CHECK(row == Eigen::RowVector2d(0, 1));
  row = effect_code(abc, NodeId{2, 3});
  CHECK(row == Eigen::RowVector2d(-1, -1));

  const auto ab = make_siblings(2);
  row = effect_code(ab, NodeId{2, 2});
  REQUIRE(row.size() == 1);
  CHECK(row(0) == -1.0);

  CHECK_THROWS_WITH_AS(effect_code(abc, NodeId{2, 9}), doctest::Contains("NotASibling"),
                       Error);
}

TEST_CASE("effect coding rows sum to zero over any sibling set") {
  for (int dim = 2; dim <= 9; ++dim) {
    const auto siblings = make_siblings(dim);
    Eigen::RowVectorXd total = Eigen::RowVectorXd::Zero(dim - 1);
    for (int i = 1; i <= dim; ++i) total += effect_code(siblings, NodeId{2, i});
    CHECK(total.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("gaussian intercept-only fit matches the closed form") {
  Eigen::VectorXd y(3);
  y << 1, 2, 3;
  const DesignMatrix d = named(Eigen::MatrixXd::Ones(3, 1));
  const GlmFit fit = fit_glm(Family::gaussian, y, d);
  CHECK(fit.beta(0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.dispersion == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  const double expected_ll =
      -1.5 * std::log(2.0 * std::numbers::pi * (2.0 / 3.0)) - 1.5;
  CHECK(fit.log_likelihood == doctest::Approx(expected_ll).epsilon(1e-12));
  CHECK(fit.k_params == 2);
  CHECK(fit.aic == doctest::Approx(4.0 - 2.0 * expected_ll).epsilon(1e-12));
  CHECK(fit.bic ==
        doctest::Approx(2.0 * std::log(3.0) - 2.0 * expected_ll).epsilon(1e-12));
}

TEST_CASE("poisson intercept-only fit matches the closed form") {
  Eigen::VectorXd y(3);
  y << 1, 2, 3;
  const DesignMatrix d = named(Eigen::MatrixXd::Ones(3, 1));
  const GlmFit fit = fit_glm(Family::poisson, y, d);
  CHECK(fit.beta(0) == doctest::Approx(std::log(2.0)).epsilon(1e-10));
  const double expected_ll = 6.0 * std::log(2.0) - 6.0 - std::log(12.0);
  CHECK(fit.log_likelihood == doctest::Approx(expected_ll).epsilon(1e-10));
  CHECK(fit.k_params == 1);
}

TEST_CASE("perfect gaussian fit is degenerate") {
  Eigen::VectorXd y(3);
  y << 2, 4, 6;
  Eigen::MatrixXd x(3, 2);
  x << 1, 1, 1, 2, 1, 3;
  CHECK_THROWS_WITH_AS(fit_glm(Family::gaussian, y, named(x)),
                       doctest::Contains("DegenerateFit"), Error);
}

TEST_CASE("rank-deficient designs name the offending column") {
  Eigen::MatrixXd x(5, 3);
  x.col(0).setOnes();
  x.col(1) << 1, 2, 3, 4, 5;
  x.col(2) = 2.0 * x.col(1);
  Eigen::VectorXd y(5);
  y << 1, 2, 1, 2, 1;
  CHECK_THROWS_WITH_AS(fit_glm(Family::gaussian, y, named(x)),
                       doctest::Contains("RankDeficient"), Error);
}

TEST_CASE("gaussian fit matches the normal equations on random designs") {
  Rng rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 20 + static_cast<int>(rng.uniform_int(0, 30));
    const int p = 2 + static_cast<int>(rng.uniform_int(0, 4));
    Eigen::MatrixXd x(n, p);
    x.col(0).setOnes();
    for (int c = 1; c < p; ++c)
      for (int r = 0; r < n; ++r) x(r, c) = rng.normal();
    Eigen::VectorXd y(n);
    for (int r = 0; r < n; ++r) y(r) = rng.normal(1.0, 2.0);
    const GlmFit fit = fit_glm(Family::gaussian, y, named(x));
    const Eigen::VectorXd beta_ne =
        (x.transpose() * x).ldlt().solve(x.transpose() * y);
    CHECK((fit.beta - beta_ne).cwiseAbs().maxCoeff() <
          1e-10 * std::max(1.0, beta_ne.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("poisson IRLS matches the Newton line-search oracle") {
  Rng rng(66);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 30 + static_cast<int>(rng.uniform_int(0, 30));
    const int p = 2 + static_cast<int>(rng.uniform_int(0, 2));
    Eigen::MatrixXd x(n, p);
    x.col(0).setOnes();
    for (int c = 1; c < p; ++c)
      for (int r = 0; r < n; ++r) x(r, c) = 0.5 * rng.normal();
    Eigen::VectorXd y(n);
    for (int r = 0; r < n; ++r)
      y(r) = static_cast<double>(rng.poisson(std::exp(0.3 + 0.4 * x(r, std::min(1, p - 1)))));
    const GlmFit fit = fit_glm(Family::poisson, y, named(x));
    const Eigen::VectorXd beta_newton = poisson_newton_oracle(y, x);
    CHECK((fit.beta - beta_newton).cwiseAbs().maxCoeff() <
          1e-8 * std::max(1.0, beta_newton.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("nested gaussian models never fit worse in RSS") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 40;
    Eigen::MatrixXd x(n, 4);
    x.col(0).setOnes();
    for (int c = 1; c < 4; ++c)
      for (int r = 0; r < n; ++r) x(r, c) = rng.normal();
    Eigen::VectorXd y(n);
    for (int r = 0; r < n; ++r) y(r) = rng.normal();
    const GlmFit small = fit_glm(Family::gaussian, y, named(x.leftCols(2)));
    const GlmFit big = fit_glm(Family::gaussian, y, named(x));
    // dispersion is RSS/n, so nesting shows up directly.
    CHECK(big.dispersion <= small.dispersion + 1e-12);
  }
}

TEST_CASE("grouped_design shapes") {
  const Hierarchy h = test::two_level_hierarchy();
  Rng rng(88);
  std::vector<int> leaves;
  for (int s = 1; s <= 9; ++s) leaves.insert(leaves.end(), 3, s);
  const Dataset d = grouped_dataset(h, leaves, rng);

  SUBCASE("single group keeps only intercept and covariates") {
    const std::vector<int> grouping(9, 0);
    const GroupCoding coding = make_group_coding(d, grouping);
    const DesignMatrix design = grouped_design(d, grouping, coding);
    CHECK(design.X.cols() == 2);
    CHECK(design.names == std::vector<std::string>{"intercept", "x1"});
  }
  SUBCASE("G groups produce G-1 dummy columns whose sums match group counts") {
    // Three groups: leaves 1-3 -> 0, 4-6 -> 1, 7-9 -> 2.
    std::vector<int> grouping(9, 0);
    for (int s = 4; s <= 6; ++s) grouping[static_cast<std::size_t>(s - 1)] = 1;
    for (int s = 7; s <= 9; ++s) grouping[static_cast<std::size_t>(s - 1)] = 2;
    const GroupCoding coding = make_group_coding(d, grouping);
    const DesignMatrix design = grouped_design(d, grouping, coding);
    CHECK(design.X.cols() == 2 + 2);
    CHECK(design.X.col(2).sum() == doctest::Approx(9.0));  // group 1 count
    CHECK(design.X.col(3).sum() == doctest::Approx(9.0));  // group 2 count
    CHECK(coding.reference == 0);
  }
  SUBCASE("identity grouping yields n_R - 1 columns") {
    std::vector<int> grouping(9);
    std::iota(grouping.begin(), grouping.end(), 0);
    const GroupCoding coding = make_group_coding(d, grouping);
    const DesignMatrix design = grouped_design(d, grouping, coding);
    CHECK(design.X.cols() == 1 + 1 + 8);
  }
  SUBCASE("unmapped group raises") {
    std::vector<int> grouping(9, 0);
    const GroupCoding coding = make_group_coding(d, grouping);
    std::vector<int> other(9, 5);
    CHECK_THROWS_WITH_AS(grouped_design(d, other, coding),
                         doctest::Contains("UnmappedLeaf"), Error);
  }
}

TEST_CASE("rmse") {
  SUBCASE("exact predictions give zero") {
    Eigen::VectorXd y(3);
    y << 1, 2, 3;
    Eigen::MatrixXd x(3, 1);
    x << 1, 2, 3;
    GlmFit fit;
    fit.family = Family::gaussian;
    fit.beta = Eigen::VectorXd::Ones(1);
    CHECK(rmse(fit, y, named(x)) == 0.0);
  }
  SUBCASE("constant prediction on y = (c+1, c-1) gives 1") {
    const double c = 4.2;
    Eigen::VectorXd y(2);
    y << c + 1, c - 1;
    GlmFit fit;
    fit.family = Family::gaussian;
    fit.beta = Eigen::VectorXd::Constant(1, c);
    CHECK(rmse(fit, y, named(Eigen::MatrixXd::Ones(2, 1))) == doctest::Approx(1.0));
  }
  SUBCASE("matches a direct residual computation") {
    Rng rng(99);
    const int n = 25;
    Eigen::MatrixXd x(n, 2);
    x.col(0).setOnes();
    for (int r = 0; r < n; ++r) x(r, 1) = rng.normal();
    Eigen::VectorXd y(n);
    for (int r = 0; r < n; ++r) y(r) = rng.normal();
    const GlmFit fit = fit_glm(Family::gaussian, y, named(x));
    const double direct =
        std::sqrt((y - x * fit.beta).squaredNorm() / static_cast<double>(n));
    CHECK(rmse(fit, y, named(x)) == doctest::Approx(direct).epsilon(1e-12));
  }
}
