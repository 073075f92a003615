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

#include "balagan/image_batch.hpp"

#include "balagan/error.hpp"

namespace balagan {

ImageBatch::ImageBatch(torch::Tensor data, ValueRange range) : data_(std::move(data)), range_(range) {
  if (!data_.defined() || data_.dim() != 4) {
    throw Error(ErrorKind::kShapeMismatch, "image batch must be rank 4 (n, c, h, w)");
  }
  if (data_.size(0) < 1) {
    throw Error(ErrorKind::kEmptyRequest, "image batch must hold at least one image");
  }
  if (!data_.is_floating_point()) {
    throw Error(ErrorKind::kConfigError, "image batch must be floating point");
  }
  torch::NoGradGuard no_grad;
  const auto lo = data_.min().item<double>();
  const auto hi = data_.max().item<double>();
  if (!(lo >= range_.lo && hi <= range_.hi)) {
    throw Error(ErrorKind::kConfigError, "image values [" + std::to_string(lo) + ", " +
                                             std::to_string(hi) + "] exceed the declared range");
  }
}

ImageBatch ImageBatch::slice(int64_t begin, int64_t end) const {
  return ImageBatch(data_.slice(0, begin, end), range_);
}

torch::Tensor bytes_to_unit_range(const torch::Tensor& bytes) {
  return bytes.to(torch::kFloat32).div(127.5).sub(1.0);
}

torch::Tensor unit_range_to_bytes(const torch::Tensor& values) {
  return values.detach().add(1.0).mul(127.5).round().clamp(0, 255).to(torch::kUInt8);
}

}  // namespace balagan
