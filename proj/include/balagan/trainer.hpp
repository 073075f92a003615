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

#ifndef BALAGAN_TRAINER_HPP
#define BALAGAN_TRAINER_HPP

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "balagan/adam.hpp"
#include "balagan/class_set.hpp"
#include "balagan/image_io.hpp"
#include "balagan/losses.hpp"
#include "balagan/modalities.hpp"
#include "balagan/networks.hpp"
#include "balagan/run_config.hpp"
#include "balagan/split_manifest.hpp"
#include "balagan/tensor_archive.hpp"

namespace balagan {

// Everything needed to continue training bit-exactly.
struct TrainState {
  Generator g{nullptr};
  Discriminator d{nullptr};
  Adam opt_g;
  Adam opt_d;
  Generator g_ema{nullptr};  // null unless EMA is enabled
  double ema_decay = 0.999;
  int64_t step = 0;
  std::mt19937_64 rng;
  std::string config_hash;
  ModelConfig model;
  int64_t n_classes = 0;
};

// Fresh networks (initialized from `seed`) and optimizers.
TrainState make_train_state(const ModelConfig& model, int64_t n_classes,
                            const TrainerOptions& options, uint64_t seed,
                            std::string config_hash = {});

struct StepMetrics {
  int64_t step = 0;  // step count after the update
  double gan_d = 0;
  double ce = 0;
  double r1 = 0;
  double gan_g = 0;
  double rec = 0;
  double fm = 0;
  double total_d = 0;
  double total_g = 0;

  nlohmann::json to_json() const;
  static StepMetrics from_json(const nlohmann::json& j);
  bool operator==(const StepMetrics&) const = default;
};

struct StepHooks {
  // called with the real batch the penalty is taken at
  std::function<void(const torch::Tensor&)> on_r1_input;
  // between the D and the G update
  std::function<void()> after_d_update;
};

// The discriminator objective terms at real sources `x` (labels m_x) and
// generated images `fake` scored at the reference labels m_y. The R1 term
// keeps its graph so it can be differentiated w.r.t. D's parameters.
DiscriminatorTerms<torch::Tensor> discriminator_terms(
    DiscriminatorImpl& d, const torch::Tensor& x, const torch::Tensor& fake, const torch::Tensor& m_x,
    const torch::Tensor& m_y, bool use_dcls = true, R1Mode r1_mode = R1Mode::kTrueClass,
    const std::function<void(const torch::Tensor&)>& on_r1_input = {});

// The generator objective terms for translating `x` with references `y`
// (labels m_y); the reconstruction term uses G(x, x).
GeneratorTerms<torch::Tensor> generator_terms(GeneratorImpl& g, DiscriminatorImpl& d,
                                              const torch::Tensor& x, const torch::Tensor& y,
                                              const torch::Tensor& m_y);

// One D update followed by one G update. Throws NonFiniteLoss (message lists
// every term) before any parameter is touched by the failing update, and
// ConfigError when `ablation.include_target` is false but the batch holds a
// target-class image.
StepMetrics train_step(TrainState& state, const TrainingBatch& batch, const ClassSet& classes,
                       const LossWeights& weights, const Ablation& ablation,
                       R1Mode r1_mode = R1Mode::kTrueClass, const StepHooks& hooks = {});

TensorArchive checkpoint_archive(const TrainState& state);
TrainState state_from_archive(const TensorArchive& archive);
void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
TrainState load_checkpoint(const std::filesystem::path& path);

// The generator used for evaluation: the EMA copy when present.
Generator& eval_generator(TrainState& state);

struct TrainRunOptions {
  bool resume = false;             // continue from the newest checkpoint in the run dir
  std::optional<int64_t> stop_at;  // leave the run incomplete after this step
  std::function<void(const StepMetrics&)> on_step;
};

struct TrainOutcome {
  std::filesystem::path run_dir;
  std::filesystem::path final_checkpoint;
  std::vector<StepMetrics> metrics;  // whole log, including resumed prefix
  bool complete = false;
};

// Run directory layout:
//   config.json       resolved config
//   metrics.ndjson    one StepMetrics record per step
//   batches.ndjson    per-step class/id audit (when enabled)
//   ckpt-<step>       TensorArchive checkpoints, ckpt-0 always written
//   INCOMPLETE        present until the final step is done
TrainOutcome train(const RunConfig& config, const SplitManifest& manifest,
                   const ModalityAssignment& assignment, const ImageStore& store,
                   const std::filesystem::path& run_dir, const TrainRunOptions& options = {});

std::vector<StepMetrics> read_metrics(const std::filesystem::path& path);
std::filesystem::path checkpoint_path(const std::filesystem::path& run_dir, int64_t step);
// newest ckpt-<step> in the directory
std::optional<std::filesystem::path> latest_checkpoint(const std::filesystem::path& run_dir);

}  // namespace balagan

#endif  // BALAGAN_TRAINER_HPP
