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

#include <algorithm>
#include <set>

#include "hiercat/dataset.hpp"
#include "test_support.hpp"

using namespace hiercat;

namespace {

Dataset toy_dataset(const Hierarchy& h, const std::vector<int>& leaves) {
  Dataset d;
  const int n = static_cast<int>(leaves.size());
  d.y = Eigen::VectorXd::LinSpaced(n, 1.0, static_cast<double>(n));
  d.leaf = leaves;
  d.x = Eigen::MatrixXd::Zero(n, 1);
  for (int i = 0; i < n; ++i) d.x(i, 0) = i;
  d.x_names = {"x1"};
  validate_dataset(d, h);
  return d;
}

}  // namespace

TEST_CASE("one_hot places the single one at the leaf position") {
  const Hierarchy h = test::two_level_hierarchy();
  Eigen::VectorXd v = one_hot(NodeId{2, 1}, h);
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(9);
  expected(0) = 1.0;
  CHECK(v == expected);
  v = one_hot(NodeId{2, 9}, h);
  CHECK(v(8) == 1.0);
  CHECK(v.sum() == 1.0);
  CHECK_THROWS_WITH_AS(one_hot(NodeId{1, 1}, h), doctest::Contains("NotALeaf"), Error);
}

TEST_CASE("one_hot over all leaves forms the identity matrix") {
  const Hierarchy h = test::two_level_hierarchy();
  Eigen::MatrixXd stacked(9, 9);
  for (int s = 1; s <= 9; ++s) stacked.row(s - 1) = one_hot(NodeId{2, s}, h).transpose();
  CHECK(stacked == Eigen::MatrixXd::Identity(9, 9));
}

TEST_CASE("one_hot on a single-leaf hierarchy") {
  const Hierarchy h = Hierarchy::from_rows({{"only"}});
  const Eigen::VectorXd v = one_hot(NodeId{1, 1}, h);
  REQUIRE(v.size() == 1);
  CHECK(v(0) == 1.0);
}

TEST_CASE("standardize uses the n-1 sample sd") {
  const Hierarchy h = Hierarchy::from_rows({{"only"}});
  Dataset d;
  d.y = Eigen::VectorXd::Zero(3);
  d.leaf = {1, 1, 1};
  d.x = Eigen::MatrixXd(3, 1);
  d.x << 1.0, 2.0, 3.0;
  d.x_names = {"x1"};

  const auto stats = standardize_fit(d, {0});
  CHECK(stats[0].mean == doctest::Approx(2.0));
  CHECK(stats[0].sd == doctest::Approx(1.0));
  const Dataset z = standardize_apply(d, {0}, stats);
  CHECK(z.x(0, 0) == doctest::Approx(-1.0));
  CHECK(z.x(1, 0) == doctest::Approx(0.0));
  CHECK(z.x(2, 0) == doctest::Approx(1.0));

  SUBCASE("idempotent on an already standardized column") {
    const auto stats2 = standardize_fit(z, {0});
    const Dataset z2 = standardize_apply(z, {0}, stats2);
    CHECK((z2.x - z.x).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("constant column raises ZeroVariance") {
    Dataset c = d;
    c.x.col(0).setConstant(5.0);
    CHECK_THROWS_WITH_AS(standardize_fit(c, {0}), doctest::Contains("ZeroVariance"),
                         Error);
  }
  SUBCASE("train stats transfer to held-out data") {
    Dataset held = d;
    held.x << 4.0, 5.0, 6.0;
    const Dataset hz = standardize_apply(held, {0}, stats);
    CHECK(hz.x(0, 0) == doctest::Approx(2.0));
  }
}

TEST_CASE("stratified split proportions") {
  const Hierarchy h = test::two_level_hierarchy();

  SUBCASE("ten observations in one class, frac 0.8") {
    const Dataset d = toy_dataset(h, std::vector<int>(10, 1));
    const auto [train, test_set] = stratified_split(d, h, 0.8, 2, 7);
    CHECK(train.n() == 8);
    CHECK(test_set.n() == 2);
  }
  SUBCASE("classes of sizes (5,5), frac 0.8") {
    std::vector<int> leaves(5, 1);
    leaves.insert(leaves.end(), 5, 2);
    const Dataset d = toy_dataset(h, leaves);
    const auto [train, test_set] = stratified_split(d, h, 0.8, 2, 7);
    CHECK(train.n() == 8);
    CHECK(test_set.n() == 2);
  }
  SUBCASE("a singleton class goes to train for any seed") {
    std::vector<int> leaves(9, 1);
    leaves.push_back(2);  // one observation in class 2
    const Dataset d = toy_dataset(h, leaves);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto [train, test_set] = stratified_split(d, h, 0.8, 2, seed);
      int count = 0;
      for (int leaf : train.leaf) count += leaf == 2 ? 1 : 0;
      CHECK(count == 1);
    }
  }
}

TEST_CASE("stratified split is a partition and deterministic") {
  const Hierarchy h = test::two_level_hierarchy();
  std::vector<int> leaves;
  for (int s = 1; s <= 9; ++s) leaves.insert(leaves.end(), 4, s);
  const Dataset d = toy_dataset(h, leaves);

  const auto [train1, test1] = stratified_split(d, h, 0.75, 1, 42);
  const auto [train2, test2] = stratified_split(d, h, 0.75, 1, 42);
  CHECK(train1.y == train2.y);
  CHECK(test1.y == test2.y);

  CHECK(train1.n() + test1.n() == d.n());
  std::set<double> ys;
  for (int i = 0; i < train1.n(); ++i) ys.insert(train1.y(i));
  for (int i = 0; i < test1.n(); ++i) ys.insert(test1.y(i));
  CHECK(static_cast<int>(ys.size()) == d.n());
}

TEST_CASE("dataset csv loading") {
  const Hierarchy h = test::two_level_hierarchy();
  const std::string path = test::temp_file("data.csv");
  test::write_file(path,
                   "y,h_leaf,x1,x2\n"
                   "1.5,c1,0.1,7\n"
                   "2.5,c9,0.2,8\n");
  const Dataset d = load_dataset_csv(path, h, ResponseKind::gaussian);
  CHECK(d.n() == 2);
  CHECK(d.p() == 2);
  CHECK(d.leaf == std::vector<int>{1, 9});
  CHECK(d.y(1) == doctest::Approx(2.5));
  CHECK(d.x(1, 1) == doctest::Approx(8.0));

  SUBCASE("unknown leaf label") {
    test::write_file(path, "y,h_leaf,x1\n1,zzz,0\n");
    CHECK_THROWS_WITH_AS(load_dataset_csv(path, h, ResponseKind::gaussian),
                         doctest::Contains("UnmappedLeaf"), Error);
  }
  SUBCASE("missing covariate cell names the droppable column") {
    test::write_file(path, "y,h_leaf,x1,x2\n1,c1,,7\n");
    CHECK_THROWS_WITH_AS(load_dataset_csv(path, h, ResponseKind::gaussian),
                         doctest::Contains("drop-cols"), Error);
    const Dataset ok = load_dataset_csv(path, h, ResponseKind::gaussian, {"x1"});
    CHECK(ok.p() == 1);
    CHECK(ok.x_names == std::vector<std::string>{"x2"});
  }
  SUBCASE("missing response is a load error") {
    test::write_file(path, "y,h_leaf,x1\n,c1,0\n");
    CHECK_THROWS_WITH_AS(load_dataset_csv(path, h, ResponseKind::gaussian),
                         doctest::Contains("missing response"), Error);
  }
  SUBCASE("poisson response must hold nonnegative integers") {
    test::write_file(path, "y,h_leaf,x1\n1.5,c1,0\n");
    CHECK_THROWS_AS(load_dataset_csv(path, h, ResponseKind::poisson), Error);
  }
}
