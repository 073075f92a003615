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

#ifndef BALAGAN_SYNTHETIC_HPP
#define BALAGAN_SYNTHETIC_HPP

#include <torch/torch.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "balagan/image_batch.hpp"

namespace balagan {

// Procedural "colored shapes" images. Content is the shape (kind, position,
// size); style is the palette and stripe texture.
struct ShapeStyle {
  std::array<float, 3> background{};  // RGB in [0, 1]
  std::array<float, 3> foreground{};
  int stripe_period = 0;              // 0 disables stripes on the foreground
  float stripe_strength = 0.0f;
  float color_noise = 0.04f;          // per-image palette jitter
};

// Well-separated source styles (up to 8) and the target style.
std::vector<ShapeStyle> synthetic_source_styles(int count);
ShapeStyle synthetic_target_style();

// uint8 (3, h, w).
torch::Tensor render_shape_image(const ShapeStyle& style, std::mt19937_64& rng,
                                 Resolution resolution);

struct SyntheticDataset {
  std::filesystem::path source_dir;
  std::filesystem::path target_dir;
  // ground-truth style per source file, parallel to `source_files`
  std::vector<std::string> source_files;
  std::vector<int> source_styles;
  std::vector<std::string> target_files;
};

// Writes `<root>/A/*.png` (`per_style` images for each of `n_styles` styles)
// and `<root>/B/*.png` (`n_target` images). Deterministic in `seed`.
SyntheticDataset write_synthetic_dataset(const std::filesystem::path& root, int n_styles,
                                         int per_style, int n_target, Resolution resolution,
                                         uint64_t seed);

}  // namespace balagan

#endif  // BALAGAN_SYNTHETIC_HPP
