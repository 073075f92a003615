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

#ifndef BALAGAN_FID_HPP
#define BALAGAN_FID_HPP

#include <Eigen/Dense>

#include <cstdint>

namespace balagan {

// Gaussian fit of a feature set: mean, unbiased covariance, sample count.
struct ActivationStats {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  int64_t n = 0;

  int64_t dim() const { return mu.size(); }
};

// Streaming mean/covariance. Batches are combined with the pairwise update
// of Chan et al., so accumulators over disjoint shards can be merged in any
// order.
class StatsAccumulator {
 public:
  StatsAccumulator() = default;
  explicit StatsAccumulator(int64_t dim);

  // rows are samples
  void add(const Eigen::MatrixXd& features);
  void merge(const StatsAccumulator& other);

  int64_t count() const { return n_; }
  int64_t dim() const { return dim_; }
  // Throws TooFewSamples when fewer than 2 samples were seen.
  ActivationStats finalize() const;

 private:
  int64_t dim_ = -1;
  int64_t n_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd m2_;  // sum of outer products of deviations
};

// In-memory two-pass equivalent of the accumulator.
ActivationStats stats_from_features(const Eigen::MatrixXd& features);

// Symmetric PSD square root by eigendecomposition; negative eigenvalues are
// clipped to 0 and counted in `clipped`.
Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m, int* clipped = nullptr);

// (A B)^{1/2} for symmetric PSD A, B, computed as S (S B S)^{1/2} S^{-1} with
// S = A^{1/2}. A must be non-singular.
Eigen::MatrixXd sqrtm_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// tr((A B)^{1/2}) = tr((S B S)^{1/2}); valid for singular A as well.
double trace_sqrt_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int* clipped = nullptr);

struct FidDiagnostics {
  double mean_term = 0;
  double trace_term = 0;
  int clipped_eigenvalues = 0;
};

// ||mu_a - mu_b||^2 + tr(sigma_a + sigma_b - 2 (sigma_a sigma_b)^{1/2}).
// Throws ShapeMismatch on differing dimensions. Clipping of a clearly
// negative eigenvalue is logged as a warning.
double fid(const ActivationStats& a, const ActivationStats& b, FidDiagnostics* diagnostics = nullptr);

}  // namespace balagan

#endif  // BALAGAN_FID_HPP
