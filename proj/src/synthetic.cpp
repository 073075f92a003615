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

#include "balagan/synthetic.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "balagan/error.hpp"
#include "balagan/image_io.hpp"

namespace balagan {

namespace fs = std::filesystem;

std::vector<ShapeStyle> synthetic_source_styles(int count) {
  static const std::vector<ShapeStyle> kStyles = {
      {{0.10f, 0.15f, 0.45f}, {0.95f, 0.85f, 0.20f}},
      {{0.85f, 0.85f, 0.80f}, {0.80f, 0.10f, 0.10f}},
      {{0.10f, 0.35f, 0.15f}, {0.95f, 0.95f, 0.95f}},
      {{0.95f, 0.55f, 0.15f}, {0.40f, 0.10f, 0.50f}},
      {{0.55f, 0.05f, 0.30f}, {0.60f, 0.95f, 0.55f}},
      {{0.30f, 0.30f, 0.30f}, {0.95f, 0.45f, 0.75f}},
      {{0.70f, 0.85f, 0.95f}, {0.05f, 0.25f, 0.20f}},
      {{0.45f, 0.30f, 0.10f}, {0.35f, 0.55f, 0.95f}},
  };
  if (count < 1 || count > static_cast<int>(kStyles.size())) {
    throw Error(ErrorKind::kConfigError, "synthetic source styles: count must be in [1, 8]");
  }
  return {kStyles.begin(), kStyles.begin() + count};
}

ShapeStyle synthetic_target_style() {
  return {{0.05f, 0.05f, 0.05f}, {0.20f, 0.85f, 0.90f}, /*stripe_period=*/4, /*stripe_strength=*/0.45f};
}

torch::Tensor render_shape_image(const ShapeStyle& style, std::mt19937_64& rng,
                                 Resolution resolution) {
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  std::normal_distribution<float> jitter(0.0f, style.color_noise);
  const int shape = std::uniform_int_distribution<int>(0, 2)(rng);
  const float h = static_cast<float>(resolution.height);
  const float w = static_cast<float>(resolution.width);
  const float side = std::min(h, w);
  const float cy = h * (0.3f + 0.4f * unit(rng));
  const float cx = w * (0.3f + 0.4f * unit(rng));
  const float radius = side * (0.18f + 0.14f * unit(rng));

  std::array<float, 3> bg{}, fg{};
  for (int c = 0; c < 3; ++c) {
    bg[c] = std::clamp(style.background[c] + jitter(rng), 0.0f, 1.0f);
    fg[c] = std::clamp(style.foreground[c] + jitter(rng), 0.0f, 1.0f);
  }

  auto image = torch::empty({3, resolution.height, resolution.width}, torch::kUInt8);
  auto acc = image.accessor<uint8_t, 3>();
  for (int64_t y = 0; y < resolution.height; ++y) {
    for (int64_t x = 0; x < resolution.width; ++x) {
      const float dy = (static_cast<float>(y) + 0.5f - cy) / radius;
      const float dx = (static_cast<float>(x) + 0.5f - cx) / radius;
      bool inside = false;
      switch (shape) {
        case 0: inside = dx * dx + dy * dy <= 1.0f; break;
        case 1: inside = std::abs(dx) <= 0.8f && std::abs(dy) <= 0.8f; break;
        default: inside = dy >= -1.0f && dy <= 0.8f && std::abs(dx) <= (dy + 1.0f) * 0.55f; break;
      }
      float shade = 1.0f;
      if (inside && style.stripe_period > 0 && ((x + y) / style.stripe_period) % 2 == 0) {
        shade = 1.0f - style.stripe_strength;
      }
      for (int c = 0; c < 3; ++c) {
        const float v = inside ? fg[c] * shade : bg[c];
        acc[c][y][x] = static_cast<uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
      }
    }
  }
  return image;
}

namespace {

std::string numbered(const std::string& prefix, int i) {
  std::ostringstream name;
  name << prefix << std::setw(5) << std::setfill('0') << i << ".png";
  return name.str();
}

}  // namespace

SyntheticDataset write_synthetic_dataset(const fs::path& root, int n_styles, int per_style,
                                         int n_target, Resolution resolution, uint64_t seed) {
  const auto styles = synthetic_source_styles(n_styles);
  SyntheticDataset out;
  out.source_dir = root / "A";
  out.target_dir = root / "B";
  fs::create_directories(out.source_dir);
  fs::create_directories(out.target_dir);

  std::mt19937_64 rng(seed);
  int counter = 0;
  // interleave styles so file order carries no style information
  for (int i = 0; i < per_style; ++i) {
    for (int s = 0; s < n_styles; ++s) {
      const auto path = out.source_dir / numbered("src_", counter++);
      write_image(path, bytes_to_unit_range(render_shape_image(styles[s], rng, resolution)));
      out.source_files.push_back(path.string());
      out.source_styles.push_back(s);
    }
  }
  const auto target = synthetic_target_style();
  for (int i = 0; i < n_target; ++i) {
    const auto path = out.target_dir / numbered("tgt_", i);
    write_image(path, bytes_to_unit_range(render_shape_image(target, rng, resolution)));
    out.target_files.push_back(path.string());
  }
  return out;
}

}  // namespace balagan
