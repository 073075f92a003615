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

#include "balagan/style_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "balagan/adam.hpp"
#include "balagan/error.hpp"
#include "balagan/nt_xent.hpp"

namespace balagan {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace {

nn::Conv2d conv(int64_t in, int64_t out, int64_t kernel, int64_t stride, int64_t padding) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, kernel).stride(stride).padding(padding));
}

}  // namespace

StyleEncoderImpl::StyleEncoderImpl(const StyleEncoderConfig& config) : config_(config) {
  const int64_t c = config.base_channels;
  trunk_ = register_module(
      "trunk", nn::Sequential(conv(3, c, 3, 1, 1), nn::ReLU(), conv(c, 2 * c, 4, 2, 1), nn::ReLU(),
                              conv(2 * c, 4 * c, 4, 2, 1), nn::ReLU(), conv(4 * c, 4 * c, 4, 2, 1),
                              nn::ReLU(), conv(4 * c, config.embedding_dim, 3, 1, 1)));
  proj1_ = register_module("proj1", nn::Linear(config.embedding_dim, config.embedding_dim));
  proj2_ = register_module("proj2", nn::Linear(config.embedding_dim, config.projection_dim));
}

torch::Tensor StyleEncoderImpl::backbone(const torch::Tensor& x) {
  return trunk_->forward(x).mean({2, 3});
}

torch::Tensor StyleEncoderImpl::project(const torch::Tensor& h) {
  return proj2_->forward(torch::relu(proj1_->forward(h)));
}

namespace {

// Views stacked as (a_0, b_0, a_1, b_1, ...).
torch::Tensor paired_views(const ImageStore& store, std::span<const int64_t> positions,
                           std::span<const uint64_t> draws, const AugmentationConfig& augmentation) {
  auto images = store.gather(positions);
  std::vector<torch::Tensor> views;
  views.reserve(positions.size() * 2);
  for (size_t i = 0; i < positions.size(); ++i) {
    auto pair = augment_pair(images[static_cast<int64_t>(i)], augmentation, draws[i]);
    views.push_back(pair.view_a);
    views.push_back(pair.view_b);
  }
  return torch::stack(views);
}

}  // namespace

EncoderTrainResult train_style_encoder(const ImageStore& store, std::span<const int64_t> positions,
                                       const AugmentationConfig& augmentation,
                                       const ContrastiveOptions& options,
                                       const StyleEncoderConfig& config) {
  if (positions.size() < 2) {
    throw Error(ErrorKind::kDegenerateBatch, "contrastive training needs at least two images");
  }
  if (!(options.temperature > 0.0)) {
    throw Error(ErrorKind::kConfigError, "temperature must be positive");
  }
  if (options.batch_size < 2 || options.steps < 0) {
    throw Error(ErrorKind::kConfigError, "contrastive batch_size must be >= 2 and steps >= 0");
  }

  torch::manual_seed(options.seed);
  EncoderTrainResult result;
  result.encoder = StyleEncoder(config);
  auto& encoder = result.encoder;
  Adam optimizer(named_parameters_of(*encoder), {options.learning_rate, 0.9, 0.999, 1e-8});

  std::mt19937_64 rng(options.seed);
  std::vector<int64_t> pool(positions.begin(), positions.end());

  std::vector<int64_t> monitor = pool;
  std::shuffle(monitor.begin(), monitor.end(), rng);
  monitor.resize(std::clamp<size_t>(options.monitor_size, 2, monitor.size()));
  std::vector<uint64_t> monitor_draws(monitor.size());
  for (auto& d : monitor_draws) d = rng();
  const auto monitor_views = paired_views(store, monitor, monitor_draws, augmentation);
  auto monitor_loss = [&] {
    torch::NoGradGuard no_grad;
    return nt_xent_loss(encoder->forward(monitor_views), options.temperature).item<double>();
  };

  result.initial_monitor_loss = monitor_loss();
  const size_t batch = std::min<size_t>(options.batch_size, pool.size());
  for (int64_t step = 0; step < options.steps; ++step) {
    // sample without replacement within the batch
    std::vector<int64_t> chosen;
    chosen.reserve(batch);
    std::sample(pool.begin(), pool.end(), std::back_inserter(chosen), batch, rng);
    std::vector<uint64_t> draws(chosen.size());
    for (auto& d : draws) d = rng();
    auto views = paired_views(store, chosen, draws, augmentation);

    optimizer.zero_grad();
    auto loss = nt_xent_loss(encoder->forward(views), options.temperature);
    const double value = loss.item<double>();
    if (!std::isfinite(value)) {
      throw Error(ErrorKind::kNonFiniteLoss, "contrastive loss is not finite at step " + std::to_string(step));
    }
    loss.backward();
    optimizer.step();
    result.loss_log.push_back(value);
  }
  result.final_monitor_loss = monitor_loss();
  return result;
}

EncoderTrainResult train_style_encoder(const SplitManifest& manifest, const ImageStore& store,
                                       const AugmentationConfig& augmentation,
                                       const ContrastiveOptions& options,
                                       const StyleEncoderConfig& config, bool include_target) {
  if (manifest.source_count() == 0) {
    throw Error(ErrorKind::kEmptyRequest, "manifest has no source items");
  }
  std::vector<int64_t> positions;
  for (const auto& id : manifest.source_items()) positions.push_back(store.index_of(id));
  if (include_target) {
    for (const auto& id : manifest.target_items()) positions.push_back(store.index_of(id));
  }
  return train_style_encoder(store, positions, augmentation, options, config);
}

torch::Tensor embed(StyleEncoder& encoder, const ImageBatch& batch, bool use_projection) {
  torch::NoGradGuard no_grad;
  auto h = encoder->backbone(batch.data());
  if (use_projection) h = encoder->project(h);
  return F::normalize(h, F::NormalizeFuncOptions().p(2).dim(1).eps(1e-12));
}

TensorArchive style_encoder_archive(StyleEncoder& encoder) {
  TensorArchive archive;
  const auto& c = encoder->config();
  archive.meta() = {{"kind", "style-encoder"},
                    {"base_channels", c.base_channels},
                    {"embedding_dim", c.embedding_dim},
                    {"projection_dim", c.projection_dim}};
  store_module_state(*encoder, archive, "encoder.");
  return archive;
}

void save_style_encoder(StyleEncoder& encoder, const std::filesystem::path& path) {
  style_encoder_archive(encoder).save(path);
}

StyleEncoder load_style_encoder(const std::filesystem::path& path) {
  const auto archive = TensorArchive::load(path);
  const auto& meta = archive.meta();
  if (meta.value("kind", "") != "style-encoder") {
    throw Error(ErrorKind::kFormatError, path.string() + " is not a style-encoder checkpoint");
  }
  StyleEncoderConfig config{meta.at("base_channels").get<int64_t>(), meta.at("embedding_dim").get<int64_t>(),
                            meta.at("projection_dim").get<int64_t>()};
  StyleEncoder encoder(config);
  load_module_state(*encoder, archive, "encoder.");
  return encoder;
}

}  // namespace balagan
