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

#include "balagan/adain.hpp"

#include "balagan/error.hpp"

namespace balagan {

torch::Tensor adain(const torch::Tensor& content, const torch::Tensor& style_mean,
                    const torch::Tensor& style_std, double eps) {
  if (content.dim() != 4 || style_mean.dim() != 2 || style_std.dim() != 2 ||
      style_mean.size(0) != content.size(0) || style_mean.size(1) != content.size(1) ||
      style_std.sizes() != style_mean.sizes()) {
    throw Error(ErrorKind::kShapeMismatch, "adain expects (n, c, h, w) content and (n, c) style");
  }
  auto mu = content.mean({2, 3}, /*keepdim=*/true);
  auto centered = content - mu;
  // clamp keeps the sqrt differentiable on dead (constant) channels
  auto sigma = centered.pow(2).mean({2, 3}, true).clamp_min(1e-24).sqrt();
  const auto n = content.size(0), c = content.size(1);
  return style_std.view({n, c, 1, 1}) * centered / (sigma + eps) + style_mean.view({n, c, 1, 1});
}

}  // namespace balagan
