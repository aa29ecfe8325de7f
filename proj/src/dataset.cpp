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

#include "hiercat/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "hiercat/csv.hpp"
#include "hiercat/rng.hpp"

namespace hiercat {

Dataset Dataset::subset(const std::vector<int>& rows) const {
  Dataset out;
  out.kind = kind;
  out.x_names = x_names;
  const int m = static_cast<int>(rows.size());
  out.y.resize(m);
  out.x.resize(m, x.cols());
  out.leaf.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    out.y(i) = y(rows[static_cast<std::size_t>(i)]);
    out.x.row(i) = x.row(rows[static_cast<std::size_t>(i)]);
    out.leaf[static_cast<std::size_t>(i)] = leaf[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])];
  }
  return out;
}

void validate_dataset(const Dataset& d, const Hierarchy& h) {
  const int n_R = h.num_leaves();
  if (static_cast<int>(d.leaf.size()) != d.n())
    throw Error(Errc::ShapeMismatch, "leaf vector length differs from y");
  if (d.x.rows() != d.n())
    throw Error(Errc::ShapeMismatch, "covariate rows differ from y");
  for (int i = 0; i < d.n(); ++i) {
    const int s = d.leaf[static_cast<std::size_t>(i)];
    if (s < 1 || s > n_R)
      throw Error(Errc::UnmappedLeaf,
                  "row " + std::to_string(i) + " references leaf index " + std::to_string(s));
  }
  if (d.kind == ResponseKind::poisson) {
    for (int i = 0; i < d.n(); ++i) {
      const double v = d.y(i);
      if (!(v >= 0) || v != std::floor(v))
        throw Error(Errc::InvalidArgument,
                    "poisson response must be a nonnegative integer, row " +
                        std::to_string(i) + " has " + fmt_double(v));
    }
  }
}

Dataset load_dataset_csv(const std::string& path, const Hierarchy& h,
                         ResponseKind kind, const std::vector<std::string>& drop_cols) {
  CsvTable t = read_csv(path);
  const int y_col = t.column("y");
  const int leaf_col = t.column("h_leaf");
  if (y_col < 0) throw Error(Errc::ParseError, path + ": missing required column 'y'");
  if (leaf_col < 0)
    throw Error(Errc::ParseError, path + ": missing required column 'h_leaf'");

  std::vector<int> cov_cols;
  std::vector<std::string> cov_names;
  for (int c = 0; c < static_cast<int>(t.header.size()); ++c) {
    if (c == y_col || c == leaf_col) continue;
    if (std::find(drop_cols.begin(), drop_cols.end(), t.header[static_cast<std::size_t>(c)]) !=
        drop_cols.end())
      continue;
    cov_cols.push_back(c);
    cov_names.push_back(t.header[static_cast<std::size_t>(c)]);
  }

  Dataset d;
  d.kind = kind;
  d.x_names = cov_names;
  const int n = static_cast<int>(t.rows.size());
  d.y.resize(n);
  d.x.resize(n, static_cast<int>(cov_cols.size()));
  d.leaf.resize(static_cast<std::size_t>(n));
  const int R = h.num_levels();
  for (int i = 0; i < n; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    const std::string& ys = row[static_cast<std::size_t>(y_col)];
    if (ys.empty() || ys == "NA")
      throw Error(Errc::ParseError, path + ": missing response in row " + std::to_string(i + 2));
    d.y(i) = parse_double(ys, path + " column y");
    const std::string& lab = row[static_cast<std::size_t>(leaf_col)];
    const int idx = h.index_of(R, lab);
    if (idx == 0)
      throw Error(Errc::UnmappedLeaf,
                  path + ": leaf label '" + lab + "' not present in the hierarchy");
    d.leaf[static_cast<std::size_t>(i)] = idx;
    for (int j = 0; j < static_cast<int>(cov_cols.size()); ++j) {
      const std::string& cell = row[static_cast<std::size_t>(cov_cols[static_cast<std::size_t>(j)])];
      if (cell.empty() || cell == "NA")
        throw Error(Errc::ParseError,
                    path + ": column '" + cov_names[static_cast<std::size_t>(j)] +
                        "' has missing values; exclude it with --drop-cols");
      d.x(i, j) = parse_double(cell, path + " column " + cov_names[static_cast<std::size_t>(j)]);
    }
  }
  validate_dataset(d, h);
  return d;
}

void write_dataset_csv(const std::string& path, const Dataset& d, const Hierarchy& h) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path);
  out << "y,h_leaf";
  for (const auto& name : d.x_names) out << ',' << csv_quote(name);
  out << '\n';
  const int R = h.num_levels();
  for (int i = 0; i < d.n(); ++i) {
    out << fmt_double(d.y(i)) << ','
        << csv_quote(h.label(NodeId{R, d.leaf[static_cast<std::size_t>(i)]}));
    for (int j = 0; j < d.p(); ++j) out << ',' << fmt_double(d.x(i, j));
    out << '\n';
  }
}

Eigen::VectorXd one_hot(NodeId leaf, const Hierarchy& h) {
  if (leaf.level != h.num_levels())
    throw Error(Errc::NotALeaf, "one_hot requires a node at level " +
                                    std::to_string(h.num_levels()));
  if (leaf.index < 1 || leaf.index > h.num_leaves())
    throw Error(Errc::InvalidArgument, "leaf index out of range");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(h.num_leaves());
  v(leaf.index - 1) = 1.0;
  return v;
}

std::vector<ColumnStats> standardize_fit(const Dataset& d, const std::vector<int>& cols) {
  std::vector<ColumnStats> stats;
  stats.reserve(cols.size());
  const int n = d.n();
  if (n < 2) throw Error(Errc::InvalidArgument, "standardize needs at least two rows");
  for (int c : cols) {
    if (c < 0 || c >= d.p())
      throw Error(Errc::InvalidArgument, "covariate column out of range");
    const double mean = d.x.col(c).mean();
    const double ss = (d.x.col(c).array() - mean).square().sum();
    const double sd = std::sqrt(ss / (n - 1));
    if (!(sd > 0))
      throw Error(Errc::ZeroVariance,
                  "column '" + d.x_names[static_cast<std::size_t>(c)] + "' is constant");
    stats.push_back({mean, sd});
  }
  return stats;
}

Dataset standardize_apply(const Dataset& d, const std::vector<int>& cols,
                          const std::vector<ColumnStats>& stats) {
  if (cols.size() != stats.size())
    throw Error(Errc::ShapeMismatch, "stats do not match selected columns");
  Dataset out = d;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const int c = cols[j];
    out.x.col(c) = (d.x.col(c).array() - stats[j].mean) / stats[j].sd;
  }
  return out;
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& d, const Hierarchy& h,
                                             double frac_train, int stratum_level,
                                             std::uint64_t seed) {
  if (!(frac_train > 0.0 && frac_train < 1.0))
    throw Error(Errc::InvalidArgument, "frac_train must lie in (0,1)");
  if (stratum_level < 1 || stratum_level > h.num_levels())
    throw Error(Errc::InvalidArgument, "stratum level out of range");

  const int n_strata = h.level_size(stratum_level);
  std::vector<std::vector<int>> by_stratum(static_cast<std::size_t>(n_strata));
  for (int i = 0; i < d.n(); ++i) {
    const int cls = h.ancestor_at(d.leaf[static_cast<std::size_t>(i)], stratum_level);
    by_stratum[static_cast<std::size_t>(cls - 1)].push_back(i);
  }

  Rng rng(seed);
  std::vector<int> train_rows, test_rows;
  for (int s = 0; s < n_strata; ++s) {
    auto& rows = by_stratum[static_cast<std::size_t>(s)];
    if (rows.empty()) continue;
    Rng local = rng.fork({static_cast<std::uint64_t>(s)});
    local.shuffle(rows);
    const auto count = static_cast<std::int64_t>(rows.size());
    std::int64_t n_train = count == 1 ? 1 : std::llround(frac_train * static_cast<double>(count));
    n_train = std::max<std::int64_t>(n_train, 1);
    n_train = std::min(n_train, count);
    for (std::int64_t i = 0; i < count; ++i) {
      if (i < n_train)
        train_rows.push_back(rows[static_cast<std::size_t>(i)]);
      else
        test_rows.push_back(rows[static_cast<std::size_t>(i)]);
    }
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  return {d.subset(train_rows), d.subset(test_rows)};
}

}  // namespace hiercat
