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

#ifndef BALAGAN_SPHERICAL_KMEANS_HPP
#define BALAGAN_SPHERICAL_KMEANS_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace balagan {

struct ClusterModel {
  Eigen::MatrixXd centroids;           // (k, d), unit rows
  std::vector<int64_t> assignments;    // per point, in [0, k)
  double objective = 0.0;              // sum of cosine similarity to assigned centroid
  std::vector<double> objective_history;  // after seeding, then after every iteration
  int iterations = 0;
  int empty_repairs = 0;
  bool converged = false;
};

// Spherical k-means: maximizes the summed cosine similarity between points
// and their assigned unit centroid. Seeding is k-means++ with the cosine
// distance 1 - cos. Each iteration assigns (ties go to the lowest index),
// repairs empty clusters by moving the worst-fitting point of a multi-member
// cluster into them, and recomputes centroids as normalized member sums. The
// recorded objective is non-decreasing. Stops when the objective gain falls
// below `tol`, assignments stop changing, or after `max_iter` iterations.
//
// Rows are normalized on entry. Throws TooFewPoints when n < k.
ClusterModel spherical_kmeans(const Eigen::MatrixXd& points, int64_t k, uint64_t init_seed,
                              int max_iter = 100, double tol = 1e-9);

// Summed cosine objective for a fixed assignment with optimal centroids,
// i.e. sum over clusters of the norm of the member sum.
double spherical_objective(const Eigen::MatrixXd& unit_points, std::span<const int64_t> assignments,
                           int64_t k);

// Diagnostics (no pass thresholds attached).
double cluster_purity(std::span<const int64_t> assignments, std::span<const int> labels);
double cosine_silhouette(const Eigen::MatrixXd& unit_points, std::span<const int64_t> assignments,
                         int64_t k);

Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& points);

}  // namespace balagan

#endif  // BALAGAN_SPHERICAL_KMEANS_HPP
