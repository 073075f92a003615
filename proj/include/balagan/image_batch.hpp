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

#ifndef BALAGAN_IMAGE_BATCH_HPP
#define BALAGAN_IMAGE_BATCH_HPP

#include <torch/torch.h>

#include <cstdint>

namespace balagan {

struct ValueRange {
  float lo = -1.0f;
  float hi = 1.0f;

  bool operator==(const ValueRange&) const = default;
};

struct Resolution {
  int64_t height = 64;
  int64_t width = 64;

  bool operator==(const Resolution&) const = default;
};

// Rank-4 float batch (n, c, h, w) whose values are guaranteed to lie inside
// `range()`. Construction validates; the wrapped tensor is shared, not copied.
class ImageBatch {
 public:
  ImageBatch() = default;
  explicit ImageBatch(torch::Tensor data, ValueRange range = {});

  const torch::Tensor& data() const { return data_; }
  ValueRange range() const { return range_; }

  int64_t size() const { return data_.size(0); }
  int64_t channels() const { return data_.size(1); }
  int64_t height() const { return data_.size(2); }
  int64_t width() const { return data_.size(3); }

  // Images [begin, end) as a new batch sharing storage.
  ImageBatch slice(int64_t begin, int64_t end) const;

 private:
  torch::Tensor data_;
  ValueRange range_;
};

// uint8 [0, 255] <-> float [-1, 1] per-channel linear scaling.
torch::Tensor bytes_to_unit_range(const torch::Tensor& bytes);
torch::Tensor unit_range_to_bytes(const torch::Tensor& values);

}  // namespace balagan

#endif  // BALAGAN_IMAGE_BATCH_HPP
