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

#ifndef BALAGAN_AUGMENT_HPP
#define BALAGAN_AUGMENT_HPP

#include <torch/torch.h>

#include <cstdint>
#include <json.hpp>
#include <string_view>
#include <vector>

#include "balagan/image_batch.hpp"

namespace balagan {

enum class AugmentKind { kCrop, kFlip, kColorJitter, kBlur, kGrayscale };

std::string_view to_string(AugmentKind kind);
AugmentKind parse_augment_kind(std::string_view name);

// One augmentation stage. Only the fields relevant to `kind` are read.
struct AugmentSpec {
  AugmentKind kind = AugmentKind::kFlip;
  double probability = 0.5;

  // random resized crop: area fraction and aspect ratio ranges
  double crop_min_scale = 0.2;
  double crop_max_scale = 1.0;
  double crop_min_ratio = 3.0 / 4.0;
  double crop_max_ratio = 4.0 / 3.0;

  // color jitter strengths (factors drawn from [1 - s, 1 + s]; hue in turns)
  double brightness = 0.4;
  double contrast = 0.4;
  double saturation = 0.4;
  double hue = 0.1;

  // gaussian blur, kernel is ~10% of the image side
  double blur_sigma_min = 0.1;
  double blur_sigma_max = 2.0;
};

struct AugmentationConfig {
  std::vector<AugmentSpec> stages;
  uint64_t rng_seed = 0;

  // crop, flip, color jitter, grayscale, blur
  static AugmentationConfig contrastive_default(uint64_t seed = 0);
  // crop and flip only: geometric distortions that leave color style intact
  static AugmentationConfig geometric_only(uint64_t seed = 0);

  nlohmann::json to_json() const;
  static AugmentationConfig from_json(const nlohmann::json& j);
};

struct AugmentedPair {
  torch::Tensor view_a;
  torch::Tensor view_b;
  // values pulled back into range by the final clamp (both views)
  int64_t clamped_values = 0;
};

// Applies the stages in order to a single (c, h, w) image. Deterministic in
// (image, config, draw_seed); `clamped` accumulates the clamp count.
torch::Tensor augment_image(const torch::Tensor& image, const AugmentationConfig& config,
                            uint64_t draw_seed, ValueRange range = {},
                            int64_t* clamped = nullptr);

// Two independent draws (streams 0 and 1 of `draw_seed`).
AugmentedPair augment_pair(const torch::Tensor& image, const AugmentationConfig& config,
                           uint64_t draw_seed, ValueRange range = {});

}  // namespace balagan

#endif  // BALAGAN_AUGMENT_HPP
