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

#ifndef HIERCAT_CLUSTERING_HPP_
#define HIERCAT_CLUSTERING_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "hiercat/common.hpp"
#include "hiercat/rng.hpp"

// k-medoids partitioning of embedding vectors under the Euclidean metric,
// silhouette validation, and K* selection with the SI* threshold rule.
//
// Items are the columns of a q x J matrix. Small instances are solved by
// exhaustive medoid enumeration, mid-size ones by PAM (greedy BUILD followed
// by best-improvement SWAP until no swap lowers the total distance to
// medoids), and instances above clara_threshold by CLARA subsampling. Only
// the CLARA branch consumes randomness; everything else is deterministic,
// so clustering the same item set twice gives identical output.
//
// All functions are pure; distinct calls may run concurrently.

namespace hiercat::cluster {

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct KmedoidsOptions {
  int clara_threshold = 200;  // J above which CLARA subsampling kicks in
  int clara_samples = 5;
  int clara_base = 40;        // sample size = min(J, clara_base + 2k)
  // Exhaustive enumeration bound: used when C(J,k) * J stays below this.
  double enumerate_budget = 2.0e5;
};

struct ClusterSolution {
  int k = 1;
  std::vector<int> assignment;          // item -> cluster index 0..k-1
  std::vector<int> medoids;             // per-cluster item index, ascending
  double cost = 0;                      // total distance to assigned medoids
  bool silhouette_defined = false;
  std::vector<double> per_item_silhouette;
  double overall_silhouette = 0;
};

template <class Scalar>
Scalar distance(const VectorX<Scalar>& a, const VectorX<Scalar>& b) {
  if (a.size() != b.size())
    throw Error(Errc::DimensionMismatch,
                "vectors of length " + std::to_string(a.size()) + " and " +
                    std::to_string(b.size()));
  return (a - b).norm();
}

template <class Scalar>
MatrixX<Scalar> pairwise_distances(const MatrixX<Scalar>& items) {
  const Eigen::Index j_count = items.cols();
  MatrixX<Scalar> d = MatrixX<Scalar>::Zero(j_count, j_count);
  for (Eigen::Index a = 0; a < j_count; ++a)
    for (Eigen::Index b = a + 1; b < j_count; ++b) {
      const Scalar v = (items.col(a) - items.col(b)).norm();
      d(a, b) = v;
      d(b, a) = v;
    }
  return d;
}

namespace detail {

template <class Scalar>
Scalar assignment_cost(const MatrixX<Scalar>& d, const std::vector<int>& medoids) {
  Scalar total = 0;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (int m : medoids) best = std::min(best, d(i, m));
    total += best;
  }
  return total;
}

// Nearest medoid per item; ties go to the lower cluster index. Medoids own
// their clusters, which keeps every cluster nonempty even when medoids
// coincide geometrically.
template <class Scalar>
std::vector<int> assign_to_medoids(const MatrixX<Scalar>& d, const std::vector<int>& medoids) {
  std::vector<int> assignment(static_cast<std::size_t>(d.rows()), -1);
  for (int c = 0; c < static_cast<int>(medoids.size()); ++c)
    assignment[static_cast<std::size_t>(medoids[static_cast<std::size_t>(c)])] = c;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    if (assignment[static_cast<std::size_t>(i)] >= 0) continue;
    int best_c = 0;
    Scalar best = d(i, medoids[0]);
    for (int c = 1; c < static_cast<int>(medoids.size()); ++c) {
      const Scalar v = d(i, medoids[static_cast<std::size_t>(c)]);
      if (v < best) {
        best = v;
        best_c = c;
      }
    }
    assignment[static_cast<std::size_t>(i)] = best_c;
  }
  return assignment;
}

template <class Scalar>
std::vector<int> pam_build(const MatrixX<Scalar>& d, int k) {
  const int j_count = static_cast<int>(d.rows());
  std::vector<int> medoids;
  medoids.reserve(static_cast<std::size_t>(k));
  int first = 0;
  Scalar first_cost = std::numeric_limits<Scalar>::infinity();
  for (int c = 0; c < j_count; ++c) {
    const Scalar total = d.col(c).sum();
    if (total < first_cost) {
      first_cost = total;
      first = c;
    }
  }
  medoids.push_back(first);
  VectorX<Scalar> nearest = d.col(first);
  while (static_cast<int>(medoids.size()) < k) {
    int best = -1;
    Scalar best_gain = -std::numeric_limits<Scalar>::infinity();
    for (int c = 0; c < j_count; ++c) {
      if (std::find(medoids.begin(), medoids.end(), c) != medoids.end()) continue;
      const Scalar gain = (nearest - d.col(c)).cwiseMax(Scalar(0)).sum();
      if (gain > best_gain) {
        best_gain = gain;
        best = c;
      }
    }
    medoids.push_back(best);
    nearest = nearest.cwiseMin(d.col(best));
  }
  return medoids;
}

template <class Scalar>
void pam_swap(const MatrixX<Scalar>& d, std::vector<int>& medoids) {
  const int j_count = static_cast<int>(d.rows());
  const int k = static_cast<int>(medoids.size());
  if (k >= j_count) return;
  std::vector<char> is_medoid(static_cast<std::size_t>(j_count), 0);
  for (int m : medoids) is_medoid[static_cast<std::size_t>(m)] = 1;

  while (true) {
    // Distance to nearest and second-nearest medoid per item.
    VectorX<Scalar> d1 = VectorX<Scalar>::Constant(j_count, std::numeric_limits<Scalar>::infinity());
    VectorX<Scalar> d2 = d1;
    std::vector<int> n1(static_cast<std::size_t>(j_count), -1);
    for (int c = 0; c < k; ++c) {
      const int m = medoids[static_cast<std::size_t>(c)];
      for (int i = 0; i < j_count; ++i) {
        const Scalar v = d(i, m);
        if (v < d1(i)) {
          d2(i) = d1(i);
          d1(i) = v;
          n1[static_cast<std::size_t>(i)] = m;
        } else if (v < d2(i)) {
          d2(i) = v;
        }
      }
    }
    Scalar best_delta = 0;
    int best_m = -1, best_h = -1;
    for (int mi = 0; mi < k; ++mi) {
      const int m = medoids[static_cast<std::size_t>(mi)];
      for (int h = 0; h < j_count; ++h) {
        if (is_medoid[static_cast<std::size_t>(h)]) continue;
        Scalar delta = 0;
        for (int i = 0; i < j_count; ++i) {
          const Scalar dih = d(i, h);
          if (n1[static_cast<std::size_t>(i)] == m)
            delta += std::min(dih, d2(i)) - d1(i);
          else if (dih < d1(i))
            delta += dih - d1(i);
        }
        if (delta < best_delta - Scalar(1e-12)) {
          best_delta = delta;
          best_m = m;
          best_h = h;
        }
      }
    }
    if (best_m < 0) break;
    is_medoid[static_cast<std::size_t>(best_m)] = 0;
    is_medoid[static_cast<std::size_t>(best_h)] = 1;
    *std::find(medoids.begin(), medoids.end(), best_m) = best_h;
  }
}

inline double binomial_approx(int n, int k) {
  double v = 1;
  for (int i = 0; i < k; ++i) {
    v *= static_cast<double>(n - i) / static_cast<double>(i + 1);
    if (v > 1e18) return v;
  }
  return v;
}

// Global optimum by scanning all k-subsets; first minimal subset in
// lexicographic order wins ties.
template <class Scalar>
std::vector<int> enumerate_medoids(const MatrixX<Scalar>& d, int k) {
  const int j_count = static_cast<int>(d.rows());
  std::vector<int> combo(static_cast<std::size_t>(k));
  std::iota(combo.begin(), combo.end(), 0);
  std::vector<int> best = combo;
  Scalar best_cost = assignment_cost(d, combo);
  while (true) {
    int pos = k - 1;
    while (pos >= 0 && combo[static_cast<std::size_t>(pos)] == j_count - k + pos) --pos;
    if (pos < 0) break;
    ++combo[static_cast<std::size_t>(pos)];
    for (int q = pos + 1; q < k; ++q)
      combo[static_cast<std::size_t>(q)] = combo[static_cast<std::size_t>(q - 1)] + 1;
    const Scalar cost = assignment_cost(d, combo);
    if (cost < best_cost) {
      best_cost = cost;
      best = combo;
    }
  }
  return best;
}

template <class Scalar>
std::vector<int> solve_medoids(const MatrixX<Scalar>& d, int k,
                               const KmedoidsOptions& opts) {
  const int j_count = static_cast<int>(d.rows());
  if (binomial_approx(j_count, k) * j_count <= opts.enumerate_budget)
    return enumerate_medoids(d, k);
  std::vector<int> medoids = pam_build(d, k);
  pam_swap(d, medoids);
  std::sort(medoids.begin(), medoids.end());
  return medoids;
}

template <class Scalar>
ClusterSolution kmedoids_from_distances(const MatrixX<Scalar>& d, int k, Rng rng,
                                        const KmedoidsOptions& opts) {
  const int j_count = static_cast<int>(d.rows());
  std::vector<int> medoids;
  if (j_count <= opts.clara_threshold || k == j_count) {
    medoids = solve_medoids(d, k, opts);
  } else {
    // CLARA: PAM on subsamples, keep the medoid set with the best
    // full-data cost. Medoids are always members of their sample.
    const int sample_size = std::min(j_count, opts.clara_base + 2 * k);
    std::vector<int> pool(static_cast<std::size_t>(j_count));
    std::iota(pool.begin(), pool.end(), 0);
    double best_cost = std::numeric_limits<double>::infinity();
    for (int s = 0; s < opts.clara_samples; ++s) {
      Rng local = rng.fork({static_cast<std::uint64_t>(s)});
      std::vector<int> shuffled = pool;
      local.shuffle(shuffled);
      std::vector<int> sample(shuffled.begin(), shuffled.begin() + sample_size);
      std::sort(sample.begin(), sample.end());
      MatrixX<Scalar> sub(sample_size, sample_size);
      for (int a = 0; a < sample_size; ++a)
        for (int b = 0; b < sample_size; ++b)
          sub(a, b) = d(sample[static_cast<std::size_t>(a)], sample[static_cast<std::size_t>(b)]);
      std::vector<int> sub_medoids = solve_medoids(sub, k, opts);
      std::vector<int> candidate;
      candidate.reserve(static_cast<std::size_t>(k));
      for (int m : sub_medoids) candidate.push_back(sample[static_cast<std::size_t>(m)]);
      const double cost = static_cast<double>(assignment_cost(d, candidate));
      if (cost < best_cost) {
        best_cost = cost;
        medoids = candidate;
      }
    }
  }
  std::sort(medoids.begin(), medoids.end());
  ClusterSolution sol;
  sol.k = k;
  sol.medoids = medoids;
  sol.assignment = assign_to_medoids(d, medoids);
  sol.cost = static_cast<double>(assignment_cost(d, medoids));
  return sol;
}

struct SilhouetteValues {
  std::vector<double> per_item;
  double overall = 0;
};

template <class Scalar>
SilhouetteValues silhouette_from_distances(const MatrixX<Scalar>& d,
                                           const std::vector<int>& assignment, int k) {
  if (k < 2)
    throw Error(Errc::SingleCluster, "silhouette is undefined for K=1");
  const int j_count = static_cast<int>(d.rows());
  std::vector<int> sizes(static_cast<std::size_t>(k), 0);
  for (int a : assignment) ++sizes[static_cast<std::size_t>(a)];
  SilhouetteValues out;
  out.per_item.resize(static_cast<std::size_t>(j_count), 0.0);
  double total = 0;
  for (int i = 0; i < j_count; ++i) {
    const int own = assignment[static_cast<std::size_t>(i)];
    if (sizes[static_cast<std::size_t>(own)] <= 1) {
      out.per_item[static_cast<std::size_t>(i)] = 0.0;  // singleton convention
      continue;
    }
    std::vector<double> sums(static_cast<std::size_t>(k), 0.0);
    for (int j2 = 0; j2 < j_count; ++j2)
      sums[static_cast<std::size_t>(assignment[static_cast<std::size_t>(j2)])] +=
          static_cast<double>(d(i, j2));
    const double a = sums[static_cast<std::size_t>(own)] /
                     static_cast<double>(sizes[static_cast<std::size_t>(own)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c == own || sizes[static_cast<std::size_t>(c)] == 0) continue;
      b = std::min(b, sums[static_cast<std::size_t>(c)] /
                          static_cast<double>(sizes[static_cast<std::size_t>(c)]));
    }
    const double denom = std::max(a, b);
    const double si = std::isfinite(denom) && denom > 0 ? (b - a) / denom : 0.0;
    out.per_item[static_cast<std::size_t>(i)] = si;
    total += si;
  }
  out.overall = total / static_cast<double>(j_count);
  return out;
}

}  // namespace detail

template <class Scalar>
ClusterSolution kmedoids(const MatrixX<Scalar>& items, int k, std::uint64_t seed,
                         const KmedoidsOptions& opts = {}) {
  const int j_count = static_cast<int>(items.cols());
  if (k < 1 || k > j_count)
    throw Error(Errc::KOutOfRange, "k=" + std::to_string(k) + " with J=" +
                                       std::to_string(j_count));
  const MatrixX<Scalar> d = pairwise_distances(items);
  return detail::kmedoids_from_distances(d, k, Rng(seed), opts);
}

// Per-item and overall silhouette for an existing solution. Items in
// singleton clusters score 0; requires k >= 2.
template <class Scalar>
void add_silhouette(const MatrixX<Scalar>& items, ClusterSolution& sol) {
  const MatrixX<Scalar> d = pairwise_distances(items);
  auto values = detail::silhouette_from_distances(d, sol.assignment, sol.k);
  sol.per_item_silhouette = std::move(values.per_item);
  sol.overall_silhouette = values.overall;
  sol.silhouette_defined = true;
}

struct SelectKResult {
  ClusterSolution solution;
  // (K, SI_K) for every K that was evaluated.
  std::vector<std::pair<int, double>> si_curve;
  bool forced_single = false;  // K*=1 imposed because max SI fell below SI*
};

// Chooses K* = argmax_K SI_K over K in {2..J-1}, falling back to the
// single-cluster solution when J <= 2 or when the best silhouette falls
// below si_star. Ties prefer the smaller K. When `ids` is given, items are
// reordered canonically by id before any work, making the result invariant
// to input order.
template <class Scalar>
SelectKResult select_k(const MatrixX<Scalar>& items, double si_star, std::uint64_t seed,
                       const std::vector<long>* ids = nullptr,
                       const KmedoidsOptions& opts = {}) {
  const int j_count = static_cast<int>(items.cols());
  if (j_count < 1) throw Error(Errc::InvalidArgument, "select_k needs at least one item");

  std::vector<int> order(static_cast<std::size_t>(j_count));
  std::iota(order.begin(), order.end(), 0);
  if (ids != nullptr) {
    if (static_cast<int>(ids->size()) != j_count)
      throw Error(Errc::ShapeMismatch, "ids length differs from item count");
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return (*ids)[static_cast<std::size_t>(a)] < (*ids)[static_cast<std::size_t>(b)]; });
  }
  MatrixX<Scalar> sorted(items.rows(), j_count);
  for (int i = 0; i < j_count; ++i) sorted.col(i) = items.col(order[static_cast<std::size_t>(i)]);

  const MatrixX<Scalar> d = pairwise_distances(sorted);
  Rng rng(seed);

  SelectKResult result;
  ClusterSolution best;
  bool have_best = false;
  for (int k = 2; k <= j_count - 1; ++k) {
    ClusterSolution sol = detail::kmedoids_from_distances(
        d, k, rng.fork({static_cast<std::uint64_t>(k)}), opts);
    auto values = detail::silhouette_from_distances(d, sol.assignment, k);
    sol.per_item_silhouette = std::move(values.per_item);
    sol.overall_silhouette = values.overall;
    sol.silhouette_defined = true;
    result.si_curve.emplace_back(k, sol.overall_silhouette);
    if (!have_best || sol.overall_silhouette > best.overall_silhouette) {
      best = std::move(sol);
      have_best = true;
    }
  }

  if (!have_best || best.overall_silhouette < si_star) {
    ClusterSolution single =
        detail::kmedoids_from_distances(d, 1, rng.fork({1}), opts);
    result.forced_single = have_best;
    result.solution = std::move(single);
  } else {
    result.solution = std::move(best);
  }

  // Map assignments back to the caller's item order.
  ClusterSolution& sol = result.solution;
  std::vector<int> assignment(static_cast<std::size_t>(j_count));
  std::vector<double> per_item(sol.per_item_silhouette.size());
  for (int i = 0; i < j_count; ++i) {
    assignment[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] =
        sol.assignment[static_cast<std::size_t>(i)];
    if (sol.silhouette_defined)
      per_item[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] =
          sol.per_item_silhouette[static_cast<std::size_t>(i)];
  }
  sol.assignment = std::move(assignment);
  if (sol.silhouette_defined) sol.per_item_silhouette = std::move(per_item);
  for (int& m : sol.medoids) m = order[static_cast<std::size_t>(m)];
  return result;
}

}  // namespace hiercat::cluster

#endif  // HIERCAT_CLUSTERING_HPP_
