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

#ifndef BALAGAN_STYLE_ENCODER_HPP
#define BALAGAN_STYLE_ENCODER_HPP

#include <torch/torch.h>

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "balagan/augment.hpp"
#include "balagan/image_batch.hpp"
#include "balagan/image_io.hpp"
#include "balagan/split_manifest.hpp"
#include "balagan/tensor_archive.hpp"

namespace balagan {

struct StyleEncoderConfig {
  int64_t base_channels = 32;
  int64_t embedding_dim = 128;
  int64_t projection_dim = 64;
};

// Small convolutional trunk producing the backbone embedding, followed by a
// two-layer projection head on which the contrastive loss is computed.
class StyleEncoderImpl : public torch::nn::Module {
 public:
  explicit StyleEncoderImpl(const StyleEncoderConfig& config = {});

  torch::Tensor backbone(const torch::Tensor& x);
  torch::Tensor project(const torch::Tensor& h);
  torch::Tensor forward(const torch::Tensor& x) { return project(backbone(x)); }

  const StyleEncoderConfig& config() const { return config_; }

 private:
  StyleEncoderConfig config_;
  torch::nn::Sequential trunk_{nullptr};
  torch::nn::Linear proj1_{nullptr};
  torch::nn::Linear proj2_{nullptr};
};
TORCH_MODULE(StyleEncoder);

struct ContrastiveOptions {
  double temperature = 0.5;
  int64_t batch_size = 32;
  int64_t steps = 200;
  double learning_rate = 1e-3;
  uint64_t seed = 0;
  int64_t monitor_size = 16;  // images in the fixed monitoring batch
};

struct EncoderTrainResult {
  StyleEncoder encoder{nullptr};
  std::vector<double> loss_log;  // training loss per step
  double initial_monitor_loss = 0.0;
  double final_monitor_loss = 0.0;
};

// Trains on the images at `positions` of `store`. The monitoring batch is a
// fixed set of images with fixed augmentation draws (never used for updates),
// evaluated before the first and after the last step. Throws NonFiniteLoss
// with the failing step.
EncoderTrainResult train_style_encoder(const ImageStore& store, std::span<const int64_t> positions,
                                       const AugmentationConfig& augmentation,
                                       const ContrastiveOptions& options,
                                       const StyleEncoderConfig& config = {});

// Convenience: trains on the manifest's source pool (plus the target pool
// when `include_target`).
EncoderTrainResult train_style_encoder(const SplitManifest& manifest, const ImageStore& store,
                                       const AugmentationConfig& augmentation,
                                       const ContrastiveOptions& options,
                                       const StyleEncoderConfig& config = {},
                                       bool include_target = false);

// Row-normalized embeddings (n, d). The backbone embedding is used unless
// `use_projection`.
torch::Tensor embed(StyleEncoder& encoder, const ImageBatch& batch, bool use_projection = false);

TensorArchive style_encoder_archive(StyleEncoder& encoder);
void save_style_encoder(StyleEncoder& encoder, const std::filesystem::path& path);
StyleEncoder load_style_encoder(const std::filesystem::path& path);

}  // namespace balagan

#endif  // BALAGAN_STYLE_ENCODER_HPP
