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

#include "balagan/fid.hpp"

#include "balagan/log.hpp"

#include <algorithm>
#include <cmath>

#include "balagan/error.hpp"

namespace balagan {

StatsAccumulator::StatsAccumulator(int64_t dim)
    : dim_(dim), mean_(Eigen::VectorXd::Zero(dim)), m2_(Eigen::MatrixXd::Zero(dim, dim)) {}

void StatsAccumulator::add(const Eigen::MatrixXd& features) {
  if (features.rows() == 0) return;
  StatsAccumulator batch(features.cols());
  batch.n_ = features.rows();
  batch.mean_ = features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = features.rowwise() - batch.mean_.transpose();
  batch.m2_ = centered.transpose() * centered;
  merge(batch);
}

void StatsAccumulator::merge(const StatsAccumulator& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    if (dim_ >= 0 && dim_ != other.dim_) {
      throw Error(ErrorKind::kShapeMismatch, "feature dimension changed between batches");
    }
    *this = other;
    return;
  }
  if (other.dim_ != dim_) {
    throw Error(ErrorKind::kShapeMismatch, "feature dimension changed between batches");
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double n = na + nb;
  const Eigen::VectorXd delta = other.mean_ - mean_;
  mean_ += delta * (nb / n);
  m2_ += other.m2_ + delta * delta.transpose() * (na * nb / n);
  n_ += other.n_;
}

ActivationStats StatsAccumulator::finalize() const {
  if (n_ < 2) {
    throw Error(ErrorKind::kTooFewSamples,
                "activation statistics need at least 2 samples, got " + std::to_string(n_));
  }
  ActivationStats s;
  s.mu = mean_;
  s.sigma = m2_ / static_cast<double>(n_ - 1);
  s.sigma = 0.5 * (s.sigma + s.sigma.transpose());
  s.n = n_;
  return s;
}

ActivationStats stats_from_features(const Eigen::MatrixXd& features) {
  if (features.rows() < 2) {
    throw Error(ErrorKind::kTooFewSamples, "activation statistics need at least 2 samples, got " +
                                               std::to_string(features.rows()));
  }
  ActivationStats s;
  s.n = features.rows();
  s.mu = features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = features.rowwise() - s.mu.transpose();
  s.sigma = centered.transpose() * centered / static_cast<double>(s.n - 1);
  s.sigma = 0.5 * (s.sigma + s.sigma.transpose());
  return s;
}

namespace {

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// Eigenvalues below -tol * scale count as genuinely negative, not rounding.
constexpr double kNegativeTolerance = 1e-10;

}  // namespace

Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m, int* clipped) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrized(m));
  Eigen::VectorXd values = eig.eigenvalues();
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] < 0) {
      if (clipped && values[i] < -kNegativeTolerance * scale) ++*clipped;
      values[i] = 0;
    }
  }
  return eig.eigenvectors() * values.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
}

Eigen::MatrixXd sqrtm_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
    throw Error(ErrorKind::kShapeMismatch, "sqrtm_product needs square matrices of equal size");
  }
  const Eigen::MatrixXd s = sqrt_psd(a);
  const Eigen::MatrixXd root = sqrt_psd(s * b * s);
  return s * root * s.inverse();
}

double trace_sqrt_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int* clipped) {
  const Eigen::MatrixXd s = sqrt_psd(a, clipped);
  return sqrt_psd(s * b * s, clipped).trace();
}

double fid(const ActivationStats& a, const ActivationStats& b, FidDiagnostics* diagnostics) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorKind::kShapeMismatch, "FID between " + std::to_string(a.dim()) + "-d and " +
                                               std::to_string(b.dim()) + "-d statistics");
  }
  int clipped = 0;
  const double mean_term = (a.mu - b.mu).squaredNorm();
  const double cross = trace_sqrt_product(a.sigma, b.sigma, &clipped);
  const double trace_term = a.sigma.trace() + b.sigma.trace() - 2.0 * cross;
  if (clipped > 0) {
    log::warn("FID: clipped ", clipped, " negative eigenvalue(s) of a covariance product");
  }
  if (diagnostics) *diagnostics = {mean_term, trace_term, clipped};
  return mean_term + trace_term;
}

}  // namespace balagan
