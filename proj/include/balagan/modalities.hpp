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

#ifndef BALAGAN_MODALITIES_HPP
#define BALAGAN_MODALITIES_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "balagan/image_io.hpp"
#include "balagan/spherical_kmeans.hpp"
#include "balagan/split_manifest.hpp"
#include "balagan/style_encoder.hpp"

namespace balagan {

// Minimal k with n_target >= n_source / k, i.e. ceil(n_source / n_target),
// or a validated override. An override that violates the inequality throws
// InvalidK unless `allow_invalid_override` (the override is then returned).
int64_t choose_k(int64_t n_source, int64_t n_target, std::optional<int64_t> override_k = {},
                 bool allow_invalid_override = false);

// Does k satisfy |B| >= |A| / k?
bool k_satisfies_balance_rule(int64_t n_source, int64_t n_target, int64_t k);

enum class ClassMode { kImbalanced, kBalanced };

std::string_view to_string(ClassMode mode);
ClassMode parse_class_mode(std::string_view text);

// Image id -> class index. Source modalities occupy [0, k_source); target
// classes occupy [k_source, k_source + k_target). In the imbalanced setting
// k_target == 1 and the whole target pool is class k_source.
//
// File form (`modalities/<name>.assign`):
//
//   #balagan-assign 1
//   #mode=<imbalanced|balanced>
//   #k=<k_source>
//   #k_target=<k_target>
//   #seed=<u64>
//   #encoder=<sha256 of the encoder checkpoint, or "external">
//   <image-id>\t<class-index>
//   ...
struct ModalityAssignment {
  ClassMode mode = ClassMode::kImbalanced;
  int64_t k_source = 1;
  int64_t k_target = 1;
  uint64_t seed = 0;
  std::string encoder_hash = "external";
  std::vector<std::pair<std::string, int64_t>> entries;

  int64_t n_classes() const { return k_source + k_target; }
  std::optional<int64_t> class_of(const std::string& id) const;
  std::vector<int64_t> histogram() const;

  std::string serialize() const;
  static ModalityAssignment parse(std::string_view text);
  void write(const std::filesystem::path& path) const;
  static ModalityAssignment read(const std::filesystem::path& path);

  bool operator==(const ModalityAssignment&) const = default;
};

struct DiscoveryOptions {
  uint64_t seed = 0;
  int max_iter = 100;
  double tol = 1e-9;
  bool use_projection = false;
  int64_t embed_batch = 64;
};

struct DiscoveryResult {
  ModalityAssignment assignment;
  ClusterModel source_clusters;
  std::optional<ClusterModel> target_clusters;  // balanced setting only
};

// Embeds every source image and clusters it into k modalities; every target
// image gets class k.
DiscoveryResult assign_modalities(const SplitManifest& manifest, const ImageStore& store,
                                  StyleEncoder& encoder, int64_t k,
                                  const DiscoveryOptions& options,
                                  const std::string& encoder_hash = "external");

// Balanced setting: source into k_source, target into k_target modalities.
DiscoveryResult assign_modalities_balanced(const SplitManifest& manifest, const ImageStore& store,
                                           StyleEncoder& encoder, int64_t k_source,
                                           int64_t k_target, const DiscoveryOptions& options,
                                           const std::string& encoder_hash = "external");

// Embeds store images at `positions` in batches.
torch::Tensor embed_positions(StyleEncoder& encoder, const ImageStore& store,
                              std::span<const int64_t> positions, bool use_projection,
                              int64_t batch_size = 64);

}  // namespace balagan

#endif  // BALAGAN_MODALITIES_HPP
