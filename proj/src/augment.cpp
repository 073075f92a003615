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

#include "balagan/augment.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "balagan/error.hpp"

namespace balagan {

namespace F = torch::nn::functional;

std::string_view to_string(AugmentKind kind) {
  switch (kind) {
    case AugmentKind::kCrop: return "crop";
    case AugmentKind::kFlip: return "flip";
    case AugmentKind::kColorJitter: return "color-jitter";
    case AugmentKind::kBlur: return "blur";
    case AugmentKind::kGrayscale: return "grayscale";
  }
  return "unknown";
}

AugmentKind parse_augment_kind(std::string_view name) {
  for (auto kind : {AugmentKind::kCrop, AugmentKind::kFlip, AugmentKind::kColorJitter,
                    AugmentKind::kBlur, AugmentKind::kGrayscale}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorKind::kConfigError, "unknown augmentation '" + std::string(name) + "'");
}

AugmentationConfig AugmentationConfig::contrastive_default(uint64_t seed) {
  AugmentationConfig config;
  config.rng_seed = seed;
  config.stages.push_back({.kind = AugmentKind::kCrop, .probability = 1.0});
  config.stages.push_back({.kind = AugmentKind::kFlip, .probability = 0.5});
  config.stages.push_back({.kind = AugmentKind::kColorJitter, .probability = 0.8});
  config.stages.push_back({.kind = AugmentKind::kGrayscale, .probability = 0.2});
  config.stages.push_back({.kind = AugmentKind::kBlur, .probability = 0.5});
  return config;
}

AugmentationConfig AugmentationConfig::geometric_only(uint64_t seed) {
  AugmentationConfig config;
  config.rng_seed = seed;
  config.stages.push_back({.kind = AugmentKind::kCrop, .probability = 1.0});
  config.stages.push_back({.kind = AugmentKind::kFlip, .probability = 0.5});
  return config;
}

nlohmann::json AugmentationConfig::to_json() const {
  nlohmann::json stages_json = nlohmann::json::array();
  for (const auto& s : stages) {
    nlohmann::json j{{"kind", std::string(to_string(s.kind))}, {"probability", s.probability}};
    switch (s.kind) {
      case AugmentKind::kCrop:
        j["min_scale"] = s.crop_min_scale;
        j["max_scale"] = s.crop_max_scale;
        j["min_ratio"] = s.crop_min_ratio;
        j["max_ratio"] = s.crop_max_ratio;
        break;
      case AugmentKind::kColorJitter:
        j["brightness"] = s.brightness;
        j["contrast"] = s.contrast;
        j["saturation"] = s.saturation;
        j["hue"] = s.hue;
        break;
      case AugmentKind::kBlur:
        j["sigma_min"] = s.blur_sigma_min;
        j["sigma_max"] = s.blur_sigma_max;
        break;
      default:
        break;
    }
    stages_json.push_back(std::move(j));
  }
  return {{"seed", rng_seed}, {"stages", stages_json}};
}

AugmentationConfig AugmentationConfig::from_json(const nlohmann::json& j) {
  AugmentationConfig config;
  for (const auto& [key, value] : j.items()) {
    if (key != "seed" && key != "stages") {
      throw Error(ErrorKind::kConfigError, "unknown augmentation key '" + key + "'");
    }
  }
  config.rng_seed = j.value("seed", uint64_t{0});
  for (const auto& sj : j.at("stages")) {
    AugmentSpec s;
    s.kind = parse_augment_kind(sj.at("kind").get<std::string>());
    for (const auto& [key, value] : sj.items()) {
      const double v = key == "kind" ? 0.0 : value.get<double>();
      if (key == "kind") continue;
      else if (key == "probability") s.probability = v;
      else if (key == "min_scale") s.crop_min_scale = v;
      else if (key == "max_scale") s.crop_max_scale = v;
      else if (key == "min_ratio") s.crop_min_ratio = v;
      else if (key == "max_ratio") s.crop_max_ratio = v;
      else if (key == "brightness") s.brightness = v;
      else if (key == "contrast") s.contrast = v;
      else if (key == "saturation") s.saturation = v;
      else if (key == "hue") s.hue = v;
      else if (key == "sigma_min") s.blur_sigma_min = v;
      else if (key == "sigma_max") s.blur_sigma_max = v;
      else throw Error(ErrorKind::kConfigError, "unknown augmentation field '" + key + "'");
    }
    if (!(s.probability >= 0.0 && s.probability <= 1.0)) {
      throw Error(ErrorKind::kConfigError, "augmentation probability must lie in [0, 1]");
    }
    config.stages.push_back(s);
  }
  return config;
}

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

torch::Tensor random_resized_crop(const torch::Tensor& x, const AugmentSpec& s, Rng& rng) {
  const int64_t h = x.size(1), w = x.size(2);
  const double area = static_cast<double>(h * w);
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double target = area * uniform(rng, s.crop_min_scale, s.crop_max_scale);
    const double ratio =
        std::exp(uniform(rng, std::log(s.crop_min_ratio), std::log(s.crop_max_ratio)));
    const auto cw = static_cast<int64_t>(std::lround(std::sqrt(target * ratio)));
    const auto ch = static_cast<int64_t>(std::lround(std::sqrt(target / ratio)));
    if (cw < 1 || ch < 1 || cw > w || ch > h) continue;
    const auto top = std::uniform_int_distribution<int64_t>(0, h - ch)(rng);
    const auto left = std::uniform_int_distribution<int64_t>(0, w - cw)(rng);
    auto patch = x.slice(1, top, top + ch).slice(2, left, left + cw).unsqueeze(0);
    return F::interpolate(patch, F::InterpolateFuncOptions()
                                     .size(std::vector<int64_t>{h, w})
                                     .mode(torch::kBilinear)
                                     .align_corners(false))
        .squeeze(0);
  }
  return x;
}

torch::Tensor luminance(const torch::Tensor& x) {
  if (x.size(0) != 3) return x.mean(0, true);
  return (x[0] * 0.299 + x[1] * 0.587 + x[2] * 0.114).unsqueeze(0);
}

torch::Tensor color_jitter(torch::Tensor x, const AugmentSpec& s, Rng& rng) {
  const double b = uniform(rng, std::max(0.0, 1.0 - s.brightness), 1.0 + s.brightness);
  const double c = uniform(rng, std::max(0.0, 1.0 - s.contrast), 1.0 + s.contrast);
  const double sat = uniform(rng, std::max(0.0, 1.0 - s.saturation), 1.0 + s.saturation);
  const double hue = uniform(rng, -s.hue, s.hue);
  x = x * b;
  const auto mean = luminance(x).mean();
  x = (x - mean) * c + mean;
  if (x.size(0) == 3) {
    const auto gray = luminance(x);
    x = (x - gray) * sat + gray;
    // hue rotation in YIQ
    const double theta = 2.0 * std::numbers::pi * hue;
    const double cs = std::cos(theta), sn = std::sin(theta);
    auto to_yiq = torch::tensor({{0.299, 0.587, 0.114}, {0.596, -0.274, -0.322}, {0.211, -0.523, 0.312}},
                                torch::kFloat64);
    auto rot = torch::tensor({{1.0, 0.0, 0.0}, {0.0, cs, -sn}, {0.0, sn, cs}}, torch::kFloat64);
    auto m = torch::linalg_inv(to_yiq).matmul(rot).matmul(to_yiq).to(x.scalar_type());
    x = m.matmul(x.reshape({3, -1})).reshape(x.sizes());
  }
  return x;
}

torch::Tensor gaussian_blur(const torch::Tensor& x, const AugmentSpec& s, Rng& rng) {
  const double sigma = uniform(rng, s.blur_sigma_min, s.blur_sigma_max);
  const int64_t side = std::min(x.size(1), x.size(2));
  int64_t k = std::max<int64_t>(3, std::lround(0.1 * static_cast<double>(side)));
  if (k % 2 == 0) ++k;
  const int64_t half = k / 2;
  if (half >= side) return x;
  auto taps = torch::arange(-half, half + 1, torch::kFloat64);
  auto kernel = torch::exp(-(taps * taps) / (2.0 * sigma * sigma));
  kernel = (kernel / kernel.sum()).to(x.scalar_type());
  const int64_t c = x.size(0);
  auto img = F::pad(x.unsqueeze(0), F::PadFuncOptions({half, half, half, half}).mode(torch::kReflect));
  auto kh = kernel.view({1, 1, 1, k}).expand({c, 1, 1, k}).contiguous();
  auto kv = kernel.view({1, 1, k, 1}).expand({c, 1, k, 1}).contiguous();
  img = F::conv2d(img, kh, F::Conv2dFuncOptions().groups(c));
  img = F::conv2d(img, kv, F::Conv2dFuncOptions().groups(c));
  return img.squeeze(0);
}

}  // namespace

torch::Tensor augment_image(const torch::Tensor& image, const AugmentationConfig& config,
                            uint64_t draw_seed, ValueRange range, int64_t* clamped) {
  if (image.dim() != 3) throw Error(ErrorKind::kShapeMismatch, "augment expects (c, h, w)");
  torch::NoGradGuard no_grad;
  std::seed_seq seq{static_cast<uint32_t>(config.rng_seed), static_cast<uint32_t>(config.rng_seed >> 32),
                    static_cast<uint32_t>(draw_seed), static_cast<uint32_t>(draw_seed >> 32)};
  Rng rng(seq);

  // geometric stages and grayscale are affine-equivariant and run in the
  // native range; color jitter works on [0, 1] intensities
  const double span = range.hi - range.lo;
  auto x = image.to(torch::kFloat32);
  bool touched = false;
  for (const auto& stage : config.stages) {
    const bool apply = uniform(rng, 0.0, 1.0) < stage.probability;
    if (!apply) continue;
    touched = true;
    switch (stage.kind) {
      case AugmentKind::kCrop: x = random_resized_crop(x, stage, rng); break;
      case AugmentKind::kFlip: x = x.flip({2}); break;
      case AugmentKind::kColorJitter:
        x = color_jitter((x - range.lo) / span, stage, rng) * span + range.lo;
        break;
      case AugmentKind::kGrayscale: x = luminance(x).expand_as(x).contiguous(); break;
      case AugmentKind::kBlur: x = gaussian_blur(x, stage, rng); break;
    }
  }
  if (!touched) return image.clone();
  const auto outside = (x < range.lo).logical_or(x > range.hi).sum().item<int64_t>();
  if (clamped != nullptr) *clamped += outside;
  return x.clamp(range.lo, range.hi);
}

AugmentedPair augment_pair(const torch::Tensor& image, const AugmentationConfig& config,
                           uint64_t draw_seed, ValueRange range) {
  AugmentedPair out;
  // the two views use disjoint streams of the same draw
  out.view_a = augment_image(image, config, draw_seed * 2, range, &out.clamped_values);
  out.view_b = augment_image(image, config, draw_seed * 2 + 1, range, &out.clamped_values);
  return out;
}

}  // namespace balagan
