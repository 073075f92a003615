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

#ifndef BALAGAN_IMAGE_IO_HPP
#define BALAGAN_IMAGE_IO_HPP

#include <torch/torch.h>

#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "balagan/image_batch.hpp"
#include "balagan/split_manifest.hpp"

namespace balagan {

// Decodes an RGB image and resizes it to `resolution` (area interpolation).
// Returns uint8 (3, h, w). Throws DecodeError.
torch::Tensor decode_image(const std::filesystem::path& path, Resolution resolution);

// Writes a (3, h, w) float image in `range` as an 8-bit PNG/JPG (by extension).
void write_image(const std::filesystem::path& path, const torch::Tensor& image,
                 ValueRange range = {});

// Decodes `ids` (which must all belong to the manifest) in order. Every
// unreadable file is collected before the call fails, so the DecodeError
// message lists all offenders.
ImageBatch load_batch(const SplitManifest& manifest, std::span<const std::string> ids,
                      Resolution resolution);

// Decoded images kept as uint8 for the lifetime of a run. Lookups are by
// position (stable) or by id.
class ImageStore {
 public:
  ImageStore() = default;
  ImageStore(std::vector<std::string> ids, torch::Tensor bytes);

  // Decodes every manifest item, source pool first.
  static ImageStore load(const SplitManifest& manifest, Resolution resolution);

  int64_t size() const { return static_cast<int64_t>(ids_.size()); }
  Resolution resolution() const;
  const std::vector<std::string>& ids() const { return ids_; }
  int64_t index_of(const std::string& id) const;
  bool contains(const std::string& id) const { return lookup_.count(id) != 0; }

  // Float batch in [-1, 1] for the given positions / ids.
  torch::Tensor gather(std::span<const int64_t> positions) const;
  torch::Tensor gather_ids(std::span<const std::string> ids) const;
  const torch::Tensor& bytes() const { return bytes_; }

 private:
  std::vector<std::string> ids_;
  torch::Tensor bytes_;
  std::unordered_map<std::string, int64_t> lookup_;
};

}  // namespace balagan

#endif  // BALAGAN_IMAGE_IO_HPP
