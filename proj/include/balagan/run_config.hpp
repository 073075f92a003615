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

#ifndef BALAGAN_RUN_CONFIG_HPP
#define BALAGAN_RUN_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>

#include "balagan/augment.hpp"
#include "balagan/class_set.hpp"
#include "balagan/image_batch.hpp"
#include "balagan/losses.hpp"
#include "balagan/modalities.hpp"
#include "balagan/networks.hpp"
#include "balagan/style_encoder.hpp"

namespace balagan {

struct DataSection {
  std::string source_dir;
  std::string target_dir;
  std::string manifest;   // existing manifest; built from the directories when empty
  int64_t n_source = 0;   // 0 = whole pool
  int64_t n_target = 0;
  Resolution resolution{64, 64};
};

struct ModalitiesSection {
  std::optional<int64_t> k;  // empty = choose the minimal valid k
  bool allow_invalid_k = false;
  ClassMode mode = ClassMode::kImbalanced;
  int64_t k_target = 1;      // balanced setting only
  std::string assignment;    // existing assignment file (skips discovery)
  StyleEncoderConfig encoder;
  ContrastiveOptions contrastive;  // seed is taken from RunConfig::seed
  AugmentationConfig augment = AugmentationConfig::contrastive_default();
  bool use_projection = false;
  int max_iter = 100;
  double tol = 1e-9;
};

struct TrainerOptions {
  int64_t steps = 10000;
  int64_t batch_size = 8;
  double lr_g = 1e-4;
  double lr_d = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int64_t checkpoint_every = 1000;
  SamplingMode sampling = SamplingMode::kClassUniform;
  bool ema = false;
  double ema_decay = 0.999;
  bool audit_batches = true;
};

struct Ablation {
  bool use_dcls = true;
  bool include_target = true;
};

struct EvaluationSection {
  uint64_t pairing_seed = 0;
  int64_t n_fake = 0;  // 0 = one translation per source image
  std::string extractor = "frozen-conv";
  std::string extractor_path;  // TorchScript module for extractor = "torchscript"
  uint64_t extractor_seed = 20240531;
  int64_t batch_size = 64;
};

// Resolved configuration of a whole run. Unknown keys anywhere are rejected
// and the hash covers the canonical (sorted-key) serialization, so it does
// not depend on key order in the source file.
struct RunConfig {
  static constexpr int kVersion = 1;

  std::string name = "run";
  uint64_t seed = 0;
  DataSection data;
  ModalitiesSection modalities;
  ModelConfig model;
  LossWeights losses;
  R1Mode r1_mode = R1Mode::kTrueClass;
  TrainerOptions trainer;
  Ablation ablation;
  EvaluationSection evaluation;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);

  std::string hash() const;
  // Throws ConfigError describing the first invalid field.
  void validate() const;
};

// Applies "section.key=value" (value parsed as JSON, falling back to a
// string) on top of `config`, re-validating the result.
RunConfig apply_override(const RunConfig& config, const std::string& assignment);

}  // namespace balagan

#endif  // BALAGAN_RUN_CONFIG_HPP
