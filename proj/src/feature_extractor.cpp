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

#include "balagan/feature_extractor.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <cmath>

#include "balagan/error.hpp"
#include "balagan/hash.hpp"

namespace balagan {

namespace F = torch::nn::functional;

FrozenConvExtractor::FrozenConvExtractor(uint64_t seed, std::vector<int64_t> widths)
    : seed_(seed), widths_(std::move(widths)) {
  if (widths_.empty()) throw Error(ErrorKind::kConfigError, "extractor needs at least one stage");
  auto gen = at::detail::createCPUGenerator(seed);
  int64_t in = 3;
  for (const int64_t out : widths_) {
    const double std = std::sqrt(2.0 / static_cast<double>(in * 9));
    weights_.push_back(at::normal(0.0, std, {out, in, 3, 3}, gen, torch::kFloat64));
    biases_.push_back(at::normal(0.0, 0.1, {out}, gen, torch::kFloat64));
    in = out;
  }
}

std::string FrozenConvExtractor::id() const {
  std::string id = "frozen-conv-" + std::to_string(seed_);
  for (const auto w : widths_) id += "-" + std::to_string(w);
  return id;
}

int64_t FrozenConvExtractor::dim() const {
  int64_t d = 6;
  for (const auto w : widths_) d += w;
  return d;
}

torch::Tensor FrozenConvExtractor::extract(const torch::Tensor& images) {
  if (images.dim() != 4 || images.size(1) != 3) {
    throw Error(ErrorKind::kShapeMismatch, "extractor expects (n, 3, h, w) images");
  }
  torch::NoGradGuard no_grad;
  auto h = images.to(torch::kFloat64);
  std::vector<torch::Tensor> parts{h.mean({2, 3}), h.std({2, 3}, /*unbiased=*/false)};
  for (size_t i = 0; i < weights_.size(); ++i) {
    h = torch::conv2d(h, weights_[i], biases_[i], /*stride=*/1, /*padding=*/1);
    h = F::leaky_relu(h, F::LeakyReLUFuncOptions().negative_slope(0.2));
    parts.push_back(h.mean({2, 3}));
    if (i + 1 < weights_.size() && h.size(2) >= 2 && h.size(3) >= 2) h = F::avg_pool2d(h, F::AvgPool2dFuncOptions(2));
  }
  return torch::cat(parts, 1);
}

TorchScriptExtractor::TorchScriptExtractor(const std::filesystem::path& path) {
  try {
    module_ = torch::jit::load(path.string());
  } catch (const c10::Error& e) {
    throw Error(ErrorKind::kIoError, "cannot load TorchScript extractor " + path.string());
  }
  module_.eval();
  id_ = "torchscript-" + sha256_file(path).substr(0, 16);
}

torch::Tensor TorchScriptExtractor::extract(const torch::Tensor& images) {
  torch::NoGradGuard no_grad;
  auto out = module_.forward({images.to(torch::kFloat32)}).toTensor();
  return out.flatten(1).to(torch::kFloat64);
}

std::unique_ptr<FeatureExtractor> make_extractor(const std::string& kind, uint64_t seed,
                                                 const std::string& path) {
  if (kind == "frozen-conv") return std::make_unique<FrozenConvExtractor>(seed);
  if (kind == "torchscript") return std::make_unique<TorchScriptExtractor>(path);
  throw Error(ErrorKind::kConfigError, "unknown feature extractor '" + kind + "'");
}

}  // namespace balagan
