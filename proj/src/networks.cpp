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

#include "balagan/networks.hpp"

#include "balagan/adain.hpp"
#include "balagan/error.hpp"

namespace balagan {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

nlohmann::json ModelConfig::to_json() const {
  return {{"gen_channels", gen_channels},         {"gen_downsamples", gen_downsamples},
          {"content_res_blocks", content_res_blocks}, {"decoder_res_blocks", decoder_res_blocks},
          {"style_channels", style_channels},     {"style_downsamples", style_downsamples},
          {"style_dim", style_dim},               {"mlp_dim", mlp_dim},
          {"dis_channels", dis_channels},         {"dis_downsamples", dis_downsamples}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  for (const auto& [key, value] : j.items()) {
    int64_t* field = nullptr;
    if (key == "gen_channels") field = &c.gen_channels;
    else if (key == "gen_downsamples") field = &c.gen_downsamples;
    else if (key == "content_res_blocks") field = &c.content_res_blocks;
    else if (key == "decoder_res_blocks") field = &c.decoder_res_blocks;
    else if (key == "style_channels") field = &c.style_channels;
    else if (key == "style_downsamples") field = &c.style_downsamples;
    else if (key == "style_dim") field = &c.style_dim;
    else if (key == "mlp_dim") field = &c.mlp_dim;
    else if (key == "dis_channels") field = &c.dis_channels;
    else if (key == "dis_downsamples") field = &c.dis_downsamples;
    else throw Error(ErrorKind::kConfigError, "unknown model key '" + key + "'");
    *field = value.get<int64_t>();
    // depths may be zero, widths may not
    const bool depth = key.ends_with("downsamples") || key.ends_with("res_blocks");
    if (*field < (depth ? 0 : 1)) {
      throw Error(ErrorKind::kConfigError, "model." + key + " is out of range");
    }
  }
  return c;
}

namespace {

nn::Conv2d conv(int64_t in, int64_t out, int64_t kernel, int64_t stride, int64_t padding,
                bool reflect = true, bool bias = true) {
  auto options = nn::Conv2dOptions(in, out, kernel).stride(stride).padding(padding).bias(bias);
  if (reflect && padding > 0) options.padding_mode(torch::kReflect);
  return nn::Conv2d(options);
}

nn::InstanceNorm2d instance_norm(int64_t channels) {
  return nn::InstanceNorm2d(nn::InstanceNorm2dOptions(channels).affine(false).track_running_stats(false));
}

class ResBlockImpl : public nn::Module {
 public:
  explicit ResBlockImpl(int64_t channels) {
    body_ = register_module("body", nn::Sequential(conv(channels, channels, 3, 1, 1), instance_norm(channels),
                                                   nn::ReLU(), conv(channels, channels, 3, 1, 1),
                                                   instance_norm(channels)));
  }
  torch::Tensor forward(const torch::Tensor& x) { return x + body_->forward(x); }

 private:
  nn::Sequential body_{nullptr};
};
TORCH_MODULE(ResBlock);

// Pre-activation residual block used by the discriminator trunk.
class ActFirstResBlockImpl : public nn::Module {
 public:
  ActFirstResBlockImpl(int64_t in, int64_t out) {
    conv1_ = register_module("conv1", conv(in, out, 3, 1, 1, /*reflect=*/false));
    conv2_ = register_module("conv2", conv(out, out, 3, 1, 1, /*reflect=*/false));
    if (in != out) shortcut_ = register_module("shortcut", conv(in, out, 1, 1, 0, false, false));
  }
  torch::Tensor forward(const torch::Tensor& x) {
    auto h = conv1_->forward(F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(0.2)));
    h = conv2_->forward(F::leaky_relu(h, F::LeakyReLUFuncOptions().negative_slope(0.2)));
    return (shortcut_ ? shortcut_->forward(x) : x) + h;
  }

 private:
  nn::Conv2d conv1_{nullptr};
  nn::Conv2d conv2_{nullptr};
  nn::Conv2d shortcut_{nullptr};
};
TORCH_MODULE(ActFirstResBlock);

}  // namespace

ContentEncoderImpl::ContentEncoderImpl(const ModelConfig& config) {
  int64_t c = config.gen_channels;
  nn::Sequential seq;
  seq->push_back(conv(3, c, 7, 1, 3));
  seq->push_back(instance_norm(c));
  seq->push_back(nn::ReLU());
  for (int64_t i = 0; i < config.gen_downsamples; ++i) {
    seq->push_back(conv(c, 2 * c, 4, 2, 1));
    seq->push_back(instance_norm(2 * c));
    seq->push_back(nn::ReLU());
    c *= 2;
  }
  for (int64_t i = 0; i < config.content_res_blocks; ++i) seq->push_back(ResBlock(c));
  layers_ = register_module("layers", seq);
  out_channels_ = c;
}

torch::Tensor ContentEncoderImpl::forward(const torch::Tensor& x) { return layers_->forward(x); }

ReferenceEncoderImpl::ReferenceEncoderImpl(const ModelConfig& config) {
  int64_t c = config.style_channels;
  const int64_t cap = 4 * config.style_channels;
  nn::Sequential seq;
  seq->push_back(conv(3, c, 7, 1, 3));
  seq->push_back(nn::ReLU());
  for (int64_t i = 0; i < config.style_downsamples; ++i) {
    const int64_t next = std::min(2 * c, cap);
    seq->push_back(conv(c, next, 4, 2, 1));
    seq->push_back(nn::ReLU());
    c = next;
  }
  seq->push_back(nn::AdaptiveAvgPool2d(nn::AdaptiveAvgPool2dOptions(1)));
  seq->push_back(conv(c, config.style_dim, 1, 1, 0));
  layers_ = register_module("layers", seq);
}

torch::Tensor ReferenceEncoderImpl::forward(const torch::Tensor& y) {
  return layers_->forward(y).flatten(1);
}

AdainResBlockImpl::AdainResBlockImpl(int64_t channels) : channels_(channels) {
  conv1_ = register_module("conv1", conv(channels, channels, 3, 1, 1));
  conv2_ = register_module("conv2", conv(channels, channels, 3, 1, 1));
}

torch::Tensor AdainResBlockImpl::forward(const torch::Tensor& x, const torch::Tensor& params) {
  // softplus(raw + ln(e - 1)) is 1 at raw = 0 and strictly positive
  constexpr double kUnitShift = 0.5413248546129181;
  auto parts = params.split(channels_, 1);
  auto std1 = F::softplus(parts[1] + kUnitShift);
  auto std2 = F::softplus(parts[3] + kUnitShift);
  auto h = torch::relu(adain(conv1_->forward(x), parts[0], std1));
  h = adain(conv2_->forward(h), parts[2], std2);
  return x + h;
}

DecoderImpl::DecoderImpl(const ModelConfig& config, int64_t content_channels) {
  int64_t c = content_channels;
  int64_t total = 0;
  for (int64_t i = 0; i < config.decoder_res_blocks; ++i) {
    blocks_.push_back(register_module("block" + std::to_string(i), AdainResBlock(c)));
    total += blocks_.back()->param_count();
  }
  if (total > 0) {
    mlp_ = register_module("mlp", nn::Sequential(nn::Linear(config.style_dim, config.mlp_dim), nn::ReLU(),
                                                 nn::Linear(config.mlp_dim, config.mlp_dim), nn::ReLU(),
                                                 nn::Linear(config.mlp_dim, total)));
  }
  nn::Sequential up;
  for (int64_t i = 0; i < config.gen_downsamples; ++i) {
    up->push_back(nn::Upsample(nn::UpsampleOptions().scale_factor(std::vector<double>{2.0, 2.0}).mode(torch::kNearest)));
    up->push_back(conv(c, c / 2, 5, 1, 2));
    up->push_back(nn::ReLU());
    c /= 2;
  }
  up->push_back(conv(c, 3, 7, 1, 3));
  up->push_back(nn::Tanh());
  upsampling_ = register_module("upsampling", up);
}

torch::Tensor DecoderImpl::forward(const torch::Tensor& content, const torch::Tensor& style) {
  auto h = content;
  if (!blocks_.empty()) {
    auto params = mlp_->forward(style);
    int64_t offset = 0;
    for (auto& block : blocks_) {
      h = block->forward(h, params.narrow(1, offset, block->param_count()));
      offset += block->param_count();
    }
  }
  return upsampling_->forward(h);
}

GeneratorImpl::GeneratorImpl(const ModelConfig& config) : config_(config) {
  content_ = register_module("content", ContentEncoder(config));
  reference_ = register_module("reference", ReferenceEncoder(config));
  decoder_ = register_module("decoder", Decoder(config, content_->out_channels()));
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& x, const torch::Tensor& y) {
  return decode(encode_content(x), encode_style(y));
}

DiscriminatorImpl::DiscriminatorImpl(const ModelConfig& config, int64_t n_classes)
    : n_classes_(n_classes) {
  if (n_classes < 1) throw Error(ErrorKind::kConfigError, "discriminator needs >= 1 class");
  int64_t c = config.dis_channels;
  const int64_t cap = 8 * config.dis_channels;
  nn::Sequential seq;
  seq->push_back(conv(3, c, 3, 1, 1, false));
  for (int64_t i = 0; i < config.dis_downsamples; ++i) {
    const int64_t next = std::min(2 * c, cap);
    seq->push_back(ActFirstResBlock(c, next));
    seq->push_back(nn::AvgPool2d(nn::AvgPool2dOptions(2)));
    c = next;
  }
  seq->push_back(ActFirstResBlock(c, c));
  seq->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)));
  trunk_ = register_module("trunk", seq);
  adv_ = register_module("adv", conv(c, n_classes, 1, 1, 0, false));
  cls_ = register_module("cls", conv(c, n_classes, 1, 1, 0, false));
  feature_dim_ = c;
}

torch::Tensor DiscriminatorImpl::trunk(const torch::Tensor& images) { return trunk_->forward(images); }

torch::Tensor DiscriminatorImpl::adv_head(const torch::Tensor& trunk_map) {
  return adv_->forward(trunk_map).mean({2, 3});
}

torch::Tensor DiscriminatorImpl::cls_head(const torch::Tensor& trunk_map) {
  return cls_->forward(trunk_map).mean({2, 3});
}

DiscriminatorOutput DiscriminatorImpl::discriminate(const torch::Tensor& images) {
  auto map = trunk(images);
  return {adv_head(map), pooled(map)};
}

ImageBatch translate(Generator& g, const ImageBatch& x, const ImageBatch& y) {
  if (x.size() != y.size() || x.channels() != y.channels() || x.height() != y.height() ||
      x.width() != y.width()) {
    throw Error(ErrorKind::kShapeMismatch, "source and reference batches must match in shape");
  }
  torch::NoGradGuard no_grad;
  return ImageBatch(g->forward(x.data(), y.data()), x.range());
}

DiscriminatorOutput discriminate(Discriminator& d, const ImageBatch& images) {
  torch::NoGradGuard no_grad;
  return d->discriminate(images.data());
}

torch::Tensor classify_real(Discriminator& d, const ImageBatch& images) {
  torch::NoGradGuard no_grad;
  return d->classify_real(images.data());
}

int64_t parameter_count(const torch::nn::Module& module) {
  int64_t total = 0;
  for (const auto& p : module.parameters(true)) total += p.numel();
  return total;
}

}  // namespace balagan
