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

#ifndef BALAGAN_NETWORKS_HPP
#define BALAGAN_NETWORKS_HPP

#include <torch/torch.h>

#include <cstdint>
#include <json.hpp>
#include <vector>

#include "balagan/image_batch.hpp"

namespace balagan {

// Widths and depths of the translation network. Defaults are desk scale.
struct ModelConfig {
  int64_t gen_channels = 32;         // first content-encoder width, doubles per downsample
  int64_t gen_downsamples = 2;
  int64_t content_res_blocks = 2;
  int64_t decoder_res_blocks = 2;
  int64_t style_channels = 32;
  int64_t style_downsamples = 3;
  int64_t style_dim = 64;
  int64_t mlp_dim = 128;
  int64_t dis_channels = 32;
  int64_t dis_downsamples = 3;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  bool operator==(const ModelConfig&) const = default;
};

// E_source: content encoder with instance-normalized downsampling convs and
// residual blocks.
class ContentEncoderImpl : public torch::nn::Module {
 public:
  explicit ContentEncoderImpl(const ModelConfig& config);
  torch::Tensor forward(const torch::Tensor& x);
  int64_t out_channels() const { return out_channels_; }

 private:
  torch::nn::Sequential layers_{nullptr};
  int64_t out_channels_ = 0;
};
TORCH_MODULE(ContentEncoder);

// E_ref: convs without normalization, global average pooling, 1x1 to the
// style code.
class ReferenceEncoderImpl : public torch::nn::Module {
 public:
  explicit ReferenceEncoderImpl(const ModelConfig& config);
  torch::Tensor forward(const torch::Tensor& y);  // (n, style_dim)

 private:
  torch::nn::Sequential layers_{nullptr};
};
TORCH_MODULE(ReferenceEncoder);

// Residual block whose two normalizations are AdaIN layers driven by
// externally supplied (mean, std) pairs.
class AdainResBlockImpl : public torch::nn::Module {
 public:
  explicit AdainResBlockImpl(int64_t channels);
  // params: (n, 4 * channels) = [mean1 | raw_std1 | mean2 | raw_std2]
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& params);
  int64_t param_count() const { return 4 * channels_; }

 private:
  int64_t channels_;
  torch::nn::Conv2d conv1_{nullptr};
  torch::nn::Conv2d conv2_{nullptr};
};
TORCH_MODULE(AdainResBlock);

// F: style MLP -> AdaIN parameters of every residual block, then nearest
// upsampling convs and a tanh output.
class DecoderImpl : public torch::nn::Module {
 public:
  DecoderImpl(const ModelConfig& config, int64_t content_channels);
  torch::Tensor forward(const torch::Tensor& content, const torch::Tensor& style);

 private:
  torch::nn::Sequential mlp_{nullptr};
  std::vector<AdainResBlock> blocks_;
  torch::nn::Sequential upsampling_{nullptr};
};
TORCH_MODULE(Decoder);

// G(x, y) = F(E_source(x), E_ref(y)).
class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(const ModelConfig& config);

  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& y);
  torch::Tensor encode_content(const torch::Tensor& x) { return content_->forward(x); }
  torch::Tensor encode_style(const torch::Tensor& y) { return reference_->forward(y); }
  torch::Tensor decode(const torch::Tensor& content, const torch::Tensor& style) {
    return decoder_->forward(content, style);
  }

  const ModelConfig& config() const { return config_; }

 private:
  ModelConfig config_;
  ContentEncoder content_{nullptr};
  ReferenceEncoder reference_{nullptr};
  Decoder decoder_{nullptr};
};
TORCH_MODULE(Generator);

struct DiscriminatorOutput {
  torch::Tensor adv_scores;      // (n, n_classes), raw
  torch::Tensor trunk_features;  // (n, feat_dim), spatially averaged D_f output
};

// D: shared trunk D_f with two heads. Parameter names are prefixed
// "trunk.", "adv." and "cls." so the groups can be addressed separately.
class DiscriminatorImpl : public torch::nn::Module {
 public:
  DiscriminatorImpl(const ModelConfig& config, int64_t n_classes);

  torch::Tensor trunk(const torch::Tensor& images);  // (n, c, h', w') feature map
  torch::Tensor pooled(const torch::Tensor& trunk_map) { return trunk_map.mean({2, 3}); }
  torch::Tensor adv_head(const torch::Tensor& trunk_map);
  torch::Tensor cls_head(const torch::Tensor& trunk_map);

  DiscriminatorOutput discriminate(const torch::Tensor& images);
  torch::Tensor classify_real(const torch::Tensor& images) { return cls_head(trunk(images)); }

  int64_t n_classes() const { return n_classes_; }
  int64_t feature_dim() const { return feature_dim_; }

 private:
  int64_t n_classes_;
  int64_t feature_dim_ = 0;
  torch::nn::Sequential trunk_{nullptr};
  torch::nn::Conv2d adv_{nullptr};
  torch::nn::Conv2d cls_{nullptr};
};
TORCH_MODULE(Discriminator);

// Batch-level wrappers validating shapes and the output range.
ImageBatch translate(Generator& g, const ImageBatch& x, const ImageBatch& y);
DiscriminatorOutput discriminate(Discriminator& d, const ImageBatch& images);
torch::Tensor classify_real(Discriminator& d, const ImageBatch& images);

int64_t parameter_count(const torch::nn::Module& module);

}  // namespace balagan

#endif  // BALAGAN_NETWORKS_HPP
