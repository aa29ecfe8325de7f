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

#include "hiercat/workflow.hpp"

#include <numeric>

#include "hiercat/csv.hpp"
#include "hiercat/embedding_table.hpp"
#include "hiercat/rng.hpp"

namespace hiercat {

EvaluateReport run_evaluate(const Hierarchy& h, const Dataset& d,
                            const EvaluateConfig& config) {
  for (double s : config.grid)
    if (s < -1.0 || s > 1.0)
      throw Error(Errc::InvalidArgument, "si_star must lie in [-1,1], got " + fmt_double(s));

  const int stratum =
      config.stratum_level == 0 ? h.num_levels() : config.stratum_level;

  Dataset train_ds, test_ds;
  bool has_test = false;
  if (config.train_frac < 1.0) {
    auto split = stratified_split(d, h, config.train_frac, stratum,
                                  Rng(config.seed).fork({21}).seed());
    train_ds = std::move(split.first);
    test_ds = std::move(split.second);
    has_test = test_ds.n() > 0;
  } else {
    train_ds = d;
  }

  if (config.standardize && train_ds.p() > 0) {
    std::vector<int> cols(static_cast<std::size_t>(train_ds.p()));
    std::iota(cols.begin(), cols.end(), 0);
    const auto stats = standardize_fit(train_ds, cols);
    train_ds = standardize_apply(train_ds, cols, stats);
    if (has_test) test_ds = standardize_apply(test_ds, cols, stats);
  }

  NetConfig nc = config.net;
  nc.loss = config.family == Family::gaussian ? LossKind::mse : LossKind::poisson_deviance;
  nc.output_activation = config.family == Family::gaussian ? OutputActivation::identity
                                                           : OutputActivation::exponential;
  nc.seed = Rng(config.seed).fork({22}).seed();
  const TrainResult tr = train(nc, train_ds, h);
  const EmbeddingTable table = aggregate_up(leaf_embeddings(tr.net, h), h);

  EvaluateReport report;
  report.has_test = has_test;

  auto evaluate_grouping = [&](const std::vector<int>& grouping, const std::string& label,
                               bool is_original, double si_star) {
    const GroupCoding coding = make_group_coding(train_ds, grouping);
    const GlmFit fit =
        fit_glm(config.family, train_ds.y, grouped_design(train_ds, grouping, coding));
    EvaluateRow row;
    row.label = label;
    row.is_original = is_original;
    row.si_star = si_star;
    row.n_groups = static_cast<int>(coding.group_ids.size());
    row.aic = fit.aic;
    row.bic = fit.bic;
    if (has_test) {
      row.rmse = rmse(fit, test_ds.y, grouped_design(test_ds, grouping, coding));
      row.has_rmse = true;
    }
    report.rows.push_back(std::move(row));
  };

  std::vector<int> identity(static_cast<std::size_t>(h.num_leaves()));
  std::iota(identity.begin(), identity.end(), 0);
  evaluate_grouping(identity, "h", true, 0.0);

  for (std::size_t i = 0; i < config.grid.size(); ++i) {
    const double si_star = config.grid[i];
    const std::uint64_t reduce_seed =
        Rng(config.seed).fork({23, static_cast<std::uint64_t>(i)}).seed();
    ReduceResult red = reduce(h, table, si_star, reduce_seed);
    evaluate_grouping(red.reduced.leaf_group, "si_star=" + fmt_double(si_star), false,
                      si_star);
    report.reductions.emplace_back(si_star, std::move(red));
  }

  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    if (report.best_aic < 0 ||
        report.rows[i].aic < report.rows[static_cast<std::size_t>(report.best_aic)].aic)
      report.best_aic = static_cast<int>(i);
    if (report.best_bic < 0 ||
        report.rows[i].bic < report.rows[static_cast<std::size_t>(report.best_bic)].bic)
      report.best_bic = static_cast<int>(i);
  }
  return report;
}

std::string evaluate_report_csv(const EvaluateReport& report) {
  std::string out = "model,si_star,n_groups,aic,bic";
  if (report.has_test) out += ",rmse";
  out += ",best\n";
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const EvaluateRow& r = report.rows[i];
    out += r.label;
    out += r.is_original ? "," : "," + fmt_double(r.si_star);
    out += "," + std::to_string(r.n_groups);
    out += "," + fmt_double(r.aic) + "," + fmt_double(r.bic);
    if (report.has_test) out += "," + (r.has_rmse ? fmt_double(r.rmse) : std::string());
    std::string marks;
    if (static_cast<int>(i) == report.best_aic) marks += "aic";
    if (static_cast<int>(i) == report.best_bic) marks += marks.empty() ? "bic" : "+bic";
    out += "," + marks + "\n";
  }
  return out;
}

}  // namespace hiercat
