/**
 * Copyright 2026 The balagan-cpp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "balagan/spherical_kmeans.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <random>

#include "balagan/error.hpp"

namespace balagan {

Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& points) {
  Eigen::MatrixXd out = points;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw Error(ErrorKind::kConfigError, "row " + std::to_string(i) + " cannot be normalized");
    }
    out.row(i) /= norm;
  }
  return out;
}

namespace {

// argmax over centroids, ties to the lowest index
std::vector<int64_t> assign(const Eigen::MatrixXd& sims) {
  std::vector<int64_t> a(static_cast<size_t>(sims.rows()));
  for (Eigen::Index i = 0; i < sims.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < sims.cols(); ++j) {
      if (sims(i, j) > sims(i, best)) best = j;
    }
    a[static_cast<size_t>(i)] = best;
  }
  return a;
}

double objective_of(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
                    const std::vector<int64_t>& a) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    total += points.row(i).dot(centroids.row(a[static_cast<size_t>(i)]));
  }
  return total;
}

// Moves the worst-fitting point of a multi-member cluster into each empty
// cluster and centers that cluster on it. Never lowers the objective.
int repair_empty(const Eigen::MatrixXd& points, Eigen::MatrixXd& centroids, std::vector<int64_t>& a) {
  const int64_t k = centroids.rows();
  std::vector<int64_t> counts(static_cast<size_t>(k), 0);
  for (auto c : a) ++counts[static_cast<size_t>(c)];
  int repairs = 0;
  for (int64_t e = 0; e < k; ++e) {
    if (counts[static_cast<size_t>(e)] != 0) continue;
    Eigen::Index worst = -1;
    double worst_sim = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const auto c = a[static_cast<size_t>(i)];
      if (counts[static_cast<size_t>(c)] < 2) continue;
      const double s = points.row(i).dot(centroids.row(c));
      if (s < worst_sim) {
        worst_sim = s;
        worst = i;
      }
    }
    --counts[static_cast<size_t>(a[static_cast<size_t>(worst)])];
    a[static_cast<size_t>(worst)] = e;
    counts[static_cast<size_t>(e)] = 1;
    centroids.row(e) = points.row(worst);
    ++repairs;
  }
  return repairs;
}

Eigen::MatrixXd seed_centroids(const Eigen::MatrixXd& points, int64_t k, std::mt19937_64& rng) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd centroids(k, points.cols());
  std::vector<bool> taken(static_cast<size_t>(n), false);
  auto first = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
  centroids.row(0) = points.row(first);
  taken[static_cast<size_t>(first)] = true;

  std::vector<double> dist(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    dist[static_cast<size_t>(i)] = std::max(0.0, 1.0 - points.row(i).dot(centroids.row(0)));
  }
  for (int64_t c = 1; c < k; ++c) {
    std::vector<double> weight(static_cast<size_t>(n));
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = taken[static_cast<size_t>(i)] ? 0.0 : dist[static_cast<size_t>(i)];
      weight[static_cast<size_t>(i)] = d * d;
      total += d * d;
    }
    Eigen::Index pick = 0;
    if (total > 0.0) {
      pick = std::discrete_distribution<Eigen::Index>(weight.begin(), weight.end())(rng);
    } else {
      // all remaining points coincide with a centroid
      std::vector<Eigen::Index> free;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!taken[static_cast<size_t>(i)]) free.push_back(i);
      }
      pick = free[std::uniform_int_distribution<size_t>(0, free.size() - 1)(rng)];
    }
    taken[static_cast<size_t>(pick)] = true;
    centroids.row(c) = points.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& d = dist[static_cast<size_t>(i)];
      d = std::min(d, std::max(0.0, 1.0 - points.row(i).dot(centroids.row(c))));
    }
  }
  return centroids;
}

}  // namespace

ClusterModel spherical_kmeans(const Eigen::MatrixXd& points, int64_t k, uint64_t init_seed,
                              int max_iter, double tol) {
  if (k < 1) throw Error(ErrorKind::kInvalidK, "k must be >= 1");
  if (points.rows() < k) {
    throw Error(ErrorKind::kTooFewPoints, std::to_string(points.rows()) + " points cannot form " +
                                              std::to_string(k) + " clusters");
  }
  const Eigen::MatrixXd unit = normalize_rows(points);
  std::mt19937_64 rng(init_seed);

  ClusterModel model;
  model.centroids = seed_centroids(unit, k, rng);
  model.assignments = assign(unit * model.centroids.transpose());
  model.empty_repairs += repair_empty(unit, model.centroids, model.assignments);
  model.objective = objective_of(unit, model.centroids, model.assignments);
  model.objective_history.push_back(model.objective);

  for (int it = 0; it < max_iter; ++it) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, unit.cols());
    for (Eigen::Index i = 0; i < unit.rows(); ++i) {
      sums.row(model.assignments[static_cast<size_t>(i)]) += unit.row(i);
    }
    Eigen::MatrixXd centroids = model.centroids;
    for (int64_t c = 0; c < k; ++c) {
      const double norm = sums.row(c).norm();
      if (norm > 1e-12) centroids.row(c) = sums.row(c) / norm;
    }
    auto assignments = assign(unit * centroids.transpose());
    const int repairs = repair_empty(unit, centroids, assignments);
    const double objective = objective_of(unit, centroids, assignments);
    const bool unchanged = repairs == 0 && assignments == model.assignments;

    model.centroids = std::move(centroids);
    model.assignments = std::move(assignments);
    model.empty_repairs += repairs;
    const double gain = objective - model.objective;
    model.objective = objective;
    model.objective_history.push_back(objective);
    model.iterations = it + 1;
    if (unchanged || gain < tol) {
      model.converged = true;
      break;
    }
  }
  return model;
}

double spherical_objective(const Eigen::MatrixXd& unit_points, std::span<const int64_t> assignments,
                           int64_t k) {
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, unit_points.cols());
  for (Eigen::Index i = 0; i < unit_points.rows(); ++i) {
    sums.row(assignments[static_cast<size_t>(i)]) += unit_points.row(i);
  }
  double total = 0.0;
  for (int64_t c = 0; c < k; ++c) total += sums.row(c).norm();
  return total;
}

double cluster_purity(std::span<const int64_t> assignments, std::span<const int> labels) {
  if (assignments.size() != labels.size() || assignments.empty()) {
    throw Error(ErrorKind::kShapeMismatch, "purity needs parallel, non-empty inputs");
  }
  std::map<int64_t, std::map<int, int64_t>> table;
  for (size_t i = 0; i < assignments.size(); ++i) ++table[assignments[i]][labels[i]];
  int64_t hits = 0;
  for (const auto& [cluster, counts] : table) {
    int64_t best = 0;
    for (const auto& [label, count] : counts) best = std::max(best, count);
    hits += best;
  }
  return static_cast<double>(hits) / static_cast<double>(assignments.size());
}

double cosine_silhouette(const Eigen::MatrixXd& unit_points, std::span<const int64_t> assignments,
                         int64_t k) {
  const Eigen::Index n = unit_points.rows();
  const Eigen::MatrixXd dist = Eigen::MatrixXd::Ones(n, n) - unit_points * unit_points.transpose();
  std::vector<int64_t> counts(static_cast<size_t>(k), 0);
  for (auto c : assignments) ++counts[static_cast<size_t>(c)];
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto own = assignments[static_cast<size_t>(i)];
    if (counts[static_cast<size_t>(own)] < 2) continue;  // singleton scores 0
    std::vector<double> mean(static_cast<size_t>(k), 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) mean[static_cast<size_t>(assignments[static_cast<size_t>(j)])] += dist(i, j);
    }
    const double a = mean[static_cast<size_t>(own)] / static_cast<double>(counts[static_cast<size_t>(own)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int64_t c = 0; c < k; ++c) {
      if (c == own || counts[static_cast<size_t>(c)] == 0) continue;
      b = std::min(b, mean[static_cast<size_t>(c)] / static_cast<double>(counts[static_cast<size_t>(c)]));
    }
    if (!std::isfinite(b)) continue;
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

}  // namespace balagan
