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

#ifndef BALAGAN_FEATURE_EXTRACTOR_HPP
#define BALAGAN_FEATURE_EXTRACTOR_HPP

#include <torch/script.h>
#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace balagan {

// Maps (n, 3, h, w) images in [-1, 1] to (n, dim) float64 features.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::string id() const = 0;
  virtual torch::Tensor extract(const torch::Tensor& images) = 0;
};

// Randomly initialized conv stack whose weights derive only from `seed`.
// Features are the channel means of every stage concatenated with the
// per-channel color mean and std of the input.
class FrozenConvExtractor : public FeatureExtractor {
 public:
  explicit FrozenConvExtractor(uint64_t seed = 20240531, std::vector<int64_t> widths = {16, 32, 64});

  std::string id() const override;
  torch::Tensor extract(const torch::Tensor& images) override;
  int64_t dim() const;

 private:
  uint64_t seed_;
  std::vector<int64_t> widths_;
  std::vector<torch::Tensor> weights_;
  std::vector<torch::Tensor> biases_;
};

// Adapter for an externally provided TorchScript module (for example a
// pretrained inception network) whose forward returns (n, d) or (n, d, 1, 1).
class TorchScriptExtractor : public FeatureExtractor {
 public:
  explicit TorchScriptExtractor(const std::filesystem::path& path);

  std::string id() const override { return id_; }
  torch::Tensor extract(const torch::Tensor& images) override;

 private:
  torch::jit::script::Module module_;
  std::string id_;
};

std::unique_ptr<FeatureExtractor> make_extractor(const std::string& kind, uint64_t seed,
                                                 const std::string& path = {});

}  // namespace balagan

#endif  // BALAGAN_FEATURE_EXTRACTOR_HPP
