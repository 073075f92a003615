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

// Shared fixtures and independent reference implementations for the test
// binaries. Oracles here use plain loops over std::vector<double> and never
// call into the library code they check.

#ifndef BALAGAN_TESTS_SUPPORT_HPP
#define BALAGAN_TESTS_SUPPORT_HPP

#include <torch/torch.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "balagan/image_io.hpp"
#include "balagan/modalities.hpp"
#include "balagan/split_manifest.hpp"
#include "balagan/synthetic.hpp"

namespace balagan::testing {

namespace fs = std::filesystem;

using Matrix = std::vector<std::vector<double>>;

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "balagan-test") {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = fs::temp_directory_path() / (tag + "-" + std::to_string(rng()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  fs::path path_;
};

inline std::vector<double> to_vector(const torch::Tensor& t) {
  auto c = t.detach().to(torch::kFloat64).contiguous().flatten();
  return {c.data_ptr<double>(), c.data_ptr<double>() + c.numel()};
}

inline Matrix to_matrix(const torch::Tensor& t) {
  auto c = t.detach().to(torch::kFloat64).contiguous();
  Matrix m(static_cast<size_t>(c.size(0)), std::vector<double>(static_cast<size_t>(c.size(1))));
  for (int64_t i = 0; i < c.size(0); ++i) {
    for (int64_t j = 0; j < c.size(1); ++j) m[i][j] = c[i][j].item<double>();
  }
  return m;
}

inline double max_abs_diff(const torch::Tensor& a, const torch::Tensor& b) {
  return (a.to(torch::kFloat64) - b.to(torch::kFloat64)).abs().max().item<double>();
}

// ---- objectives ----------------------------------------------------------

inline double oracle_hinge_d(const std::vector<double>& real, const std::vector<double>& fake) {
  double r = 0, f = 0;
  for (double v : real) r += std::max(0.0, 1.0 - v);
  for (double v : fake) f += std::max(0.0, 1.0 + v);
  return r / real.size() + f / fake.size();
}

inline double oracle_hinge_g(const std::vector<double>& fake) {
  double s = 0;
  for (double v : fake) s += v;
  return -s / fake.size();
}

inline double oracle_mean_abs(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return s / a.size();
}

inline double oracle_cross_entropy(const Matrix& logits, const std::vector<int64_t>& labels) {
  double total = 0;
  for (size_t i = 0; i < logits.size(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : logits[i]) mx = std::max(mx, v);
    double z = 0;
    for (double v : logits[i]) z += std::exp(v - mx);
    total += -(logits[i][labels[i]] - mx - std::log(z));
  }
  return total / logits.size();
}

inline std::vector<double> oracle_select(const Matrix& scores, const std::vector<int64_t>& labels) {
  std::vector<double> out;
  for (size_t i = 0; i < scores.size(); ++i) out.push_back(scores[i][labels[i]]);
  return out;
}

// Rows (2i, 2i+1) are positive pairs; softmax over every other row.
inline double oracle_nt_xent(const Matrix& z, double tau) {
  const size_t n = z.size();
  std::vector<std::vector<double>> u(n);
  for (size_t i = 0; i < n; ++i) {
    double norm = 0;
    for (double v : z[i]) norm += v * v;
    norm = std::sqrt(norm);
    for (double v : z[i]) u[i].push_back(v / norm);
  }
  double total = 0;
  for (size_t i = 0; i < n; ++i) {
    const size_t partner = (i % 2 == 0) ? i + 1 : i - 1;
    double denom = 0, pos = 0;
    for (size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double dot = 0;
      for (size_t d = 0; d < u[i].size(); ++d) dot += u[i][d] * u[j][d];
      denom += std::exp(dot / tau);
      if (j == partner) pos = dot / tau;
    }
    total += -(pos - std::log(denom));
  }
  return total / n;
}

// (n, c, h, w) -> out[n][c][p] with per-channel standardization then restyle.
inline std::vector<double> oracle_adain(const torch::Tensor& content, const torch::Tensor& mean,
                                        const torch::Tensor& std, double eps) {
  const auto x = content.to(torch::kFloat64).contiguous();
  const int64_t n = x.size(0), c = x.size(1), p = x.size(2) * x.size(3);
  const auto data = to_vector(x);
  const auto m = to_vector(mean);
  const auto s = to_vector(std);
  std::vector<double> out(data.size());
  for (int64_t a = 0; a < n; ++a) {
    for (int64_t b = 0; b < c; ++b) {
      const double* v = &data[(a * c + b) * p];
      double mu = 0;
      for (int64_t i = 0; i < p; ++i) mu += v[i];
      mu /= p;
      double var = 0;
      for (int64_t i = 0; i < p; ++i) var += (v[i] - mu) * (v[i] - mu);
      const double sigma = std::sqrt(var / p);
      for (int64_t i = 0; i < p; ++i) {
        out[(a * c + b) * p + i] = s[a * c + b] * (v[i] - mu) / (sigma + eps) + m[a * c + b];
      }
    }
  }
  return out;
}

// ---- clustering ----------------------------------------------------------

// Sum over clusters of ||sum of member unit vectors||, the quantity spherical
// k-means maximizes, for one explicit labeling.
inline double oracle_spherical_objective(const Matrix& unit_points, const std::vector<int>& labels,
                                         int k) {
  const size_t d = unit_points[0].size();
  Matrix sums(static_cast<size_t>(k), std::vector<double>(d, 0.0));
  for (size_t i = 0; i < unit_points.size(); ++i) {
    for (size_t j = 0; j < d; ++j) sums[labels[i]][j] += unit_points[i][j];
  }
  double total = 0;
  for (const auto& s : sums) {
    double n = 0;
    for (double v : s) n += v * v;
    total += std::sqrt(n);
  }
  return total;
}

// Exhaustive search over all k^n labelings.
inline double oracle_best_spherical_objective(const Matrix& unit_points, int k,
                                              std::vector<int>* best_labels = nullptr) {
  const size_t n = unit_points.size();
  std::vector<int> labels(n, 0);
  double best = -1;
  int64_t total = 1;
  for (size_t i = 0; i < n; ++i) total *= k;
  for (int64_t code = 0; code < total; ++code) {
    int64_t c = code;
    for (size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(c % k);
      c /= k;
    }
    const double obj = oracle_spherical_objective(unit_points, labels, k);
    if (obj > best) {
      best = obj;
      if (best_labels) *best_labels = labels;
    }
  }
  return best;
}

// ---- finite differences --------------------------------------------------

// Central differences of scalar f with respect to every element of `param`
// (a float64 tensor modified in place and restored).
inline torch::Tensor central_difference(const std::function<double()>& f, torch::Tensor param,
                                        double step) {
  torch::NoGradGuard no_grad;
  auto flat = param.view({-1});
  auto grad = torch::zeros_like(flat);
  for (int64_t i = 0; i < flat.numel(); ++i) {
    const double orig = flat[i].item<double>();
    flat[i] = orig + step;
    const double up = f();
    flat[i] = orig - step;
    const double down = f();
    flat[i] = orig;
    grad[i] = (up - down) / (2 * step);
  }
  return grad.view(param.sizes());
}

inline double relative_error(const torch::Tensor& analytic, const torch::Tensor& numeric) {
  const double num = (analytic - numeric).norm().item<double>();
  const double den = std::max({analytic.norm().item<double>(), numeric.norm().item<double>(), 1e-12});
  return num / den;
}

// ---- data ----------------------------------------------------------------

// Synthetic colored-shapes data on disk plus its manifest, decoded store and
// the ground-truth style labels as an assignment.
struct ToyData {
  std::unique_ptr<TempDir> dir;
  SyntheticDataset files;
  SplitManifest manifest{{}, {}, 0};
  ImageStore store;
  ModalityAssignment truth;
};

inline ToyData make_toy_data(int n_styles, int per_style, int n_target, int64_t size, uint64_t seed) {
  ToyData t;
  t.dir = std::make_unique<TempDir>("balagan-toy");
  t.files = write_synthetic_dataset(t.dir->path(), n_styles, per_style, n_target,
                                    Resolution{size, size}, seed);
  t.manifest = SplitManifest(t.files.source_files, t.files.target_files, seed);
  t.store = ImageStore::load(t.manifest, Resolution{size, size});
  t.truth.k_source = n_styles;
  t.truth.k_target = 1;
  t.truth.seed = seed;
  for (size_t i = 0; i < t.files.source_files.size(); ++i) {
    t.truth.entries.emplace_back(t.files.source_files[i], t.files.source_styles[i]);
  }
  for (const auto& id : t.files.target_files) t.truth.entries.emplace_back(id, n_styles);
  return t;
}

}  // namespace balagan::testing

#endif  // BALAGAN_TESTS_SUPPORT_HPP
