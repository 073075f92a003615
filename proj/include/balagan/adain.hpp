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

#ifndef BALAGAN_ADAIN_HPP
#define BALAGAN_ADAIN_HPP

#include <torch/torch.h>

namespace balagan {

inline constexpr double kAdainEps = 1e-5;

// Adaptive instance normalization of (n, c, h, w) content features:
//
//   out = style_std * (content - mu) / (sigma + eps) + style_mean
//
// with mu / sigma the per-(image, channel) spatial mean and population
// standard deviation. style_mean / style_std are (n, c). A constant channel
// maps to style_mean exactly.
torch::Tensor adain(const torch::Tensor& content, const torch::Tensor& style_mean,
                    const torch::Tensor& style_std, double eps = kAdainEps);

}  // namespace balagan

#endif  // BALAGAN_ADAIN_HPP
