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

#ifndef BALAGAN_EVALUATION_HPP
#define BALAGAN_EVALUATION_HPP

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "balagan/feature_extractor.hpp"
#include "balagan/fid.hpp"
#include "balagan/image_io.hpp"
#include "balagan/networks.hpp"
#include "balagan/run_config.hpp"
#include "balagan/split_manifest.hpp"

namespace balagan {

// Pulls the next (n, 3, h, w) batch, or nothing once the stream is done.
using ImageStream = std::function<std::optional<torch::Tensor>()>;

ImageStream stream_tensor(torch::Tensor images, int64_t batch_size);

// Throws TooFewSamples for fewer than 2 images.
ActivationStats compute_activation_stats(const ImageStream& images, FeatureExtractor& extractor);
ActivationStats compute_activation_stats(const torch::Tensor& images, FeatureExtractor& extractor,
                                         int64_t batch_size = 64);

// Which reference styled each translated source.
//
//   #balagan-pairs 1
//   #seed=<u64>
//   <source-id>\t<reference-id>
struct PairingManifest {
  uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> pairs;

  std::string serialize() const;
  static PairingManifest parse(std::string_view text);
  bool operator==(const PairingManifest&) const = default;
};

// One reference per source, drawn uniformly from `reference_ids`.
PairingManifest make_pairing(std::span<const std::string> source_ids,
                             std::span<const std::string> reference_ids, uint64_t seed);

struct Translation {
  torch::Tensor images;  // (n_sources, 3, h, w), row i translates source i
  PairingManifest pairing;
};

// Throws EmptyRequest when either list is empty.
Translation translate_dataset(Generator& g, const ImageStore& store,
                              std::span<const std::string> source_ids,
                              std::span<const std::string> reference_ids, uint64_t pairing_seed,
                              int64_t batch_size = 32);

void write_translation(const Translation& t, const std::filesystem::path& dir);

struct DiversityGrid {
  torch::Tensor cells;      // (m, n, 3, h, w); cell (i, j) = G(source_i, reference_j)
  torch::Tensor composite;  // (3, m*h + (m-1)*gutter, n*w + (n-1)*gutter)
};

DiversityGrid diversity_grid(Generator& g, const torch::Tensor& sources,
                             const torch::Tensor& references, int64_t gutter = 2,
                             float gutter_value = 1.0f);

struct FidReport {
  std::string extractor_id;
  int64_t n_real = 0;
  int64_t n_fake = 0;
  double fid = 0;

  nlohmann::json to_json() const;
};

FidReport fid_report(FeatureExtractor& extractor, const torch::Tensor& real,
                     const torch::Tensor& fake, int64_t batch_size = 64);

// Translates the source pool (all of it, or the first n_fake positions of a
// shuffled order) with references from the target pool and scores it against
// the real target pool.
FidReport evaluate_translation(Generator& g, const SplitManifest& manifest, const ImageStore& store,
                               const EvaluationSection& options, FeatureExtractor& extractor);

struct SweepRow {
  int64_t k = 0;
  std::optional<double> fid;
  std::string error;  // set when the run for this k failed
  std::filesystem::path run_dir;
};

struct SweepOptions {
  // called after each k finishes (successfully or not)
  std::function<void(const SweepRow&)> on_row;
};

// One discovery + training + evaluation per k; the style encoder is trained
// once and shared. Throws DuplicateK (and InvalidK unless the config allows
// invalid overrides) before any compute; failures of a single k are recorded
// in its row and the sweep continues. Writes sweep.tsv and sweep.json under
// `out_dir`.
std::vector<SweepRow> k_sweep(const RunConfig& config, std::span<const int64_t> k_values,
                              const SplitManifest& manifest, const ImageStore& store,
                              const std::filesystem::path& out_dir, const SweepOptions& options = {});

std::string sweep_table(std::span<const SweepRow> rows);

}  // namespace balagan

#endif  // BALAGAN_EVALUATION_HPP
