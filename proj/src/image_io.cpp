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

#include "balagan/image_io.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <sstream>

#include "balagan/error.hpp"

namespace balagan {

namespace fs = std::filesystem;

namespace {

// Decodes every id; all failures are reported together.
torch::Tensor decode_all(std::span<const std::string> ids, Resolution resolution) {
  std::vector<torch::Tensor> images;
  std::vector<std::string> failed;
  images.reserve(ids.size());
  for (const auto& id : ids) {
    try {
      images.push_back(decode_image(id, resolution));
    } catch (const Error&) {
      failed.push_back(id);
    }
  }
  if (!failed.empty()) {
    std::ostringstream msg;
    msg << failed.size() << " file(s) could not be decoded:";
    for (const auto& f : failed) msg << " " << f;
    throw Error(ErrorKind::kDecodeError, msg.str());
  }
  return torch::stack(images);
}

}  // namespace

torch::Tensor decode_image(const fs::path& path, Resolution resolution) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw Error(ErrorKind::kDecodeError, "cannot decode " + path.string());
  if (bgr.rows != resolution.height || bgr.cols != resolution.width) {
    cv::Mat resized;
    cv::resize(bgr, resized, cv::Size(static_cast<int>(resolution.width),
                                      static_cast<int>(resolution.height)),
               0, 0, cv::INTER_AREA);
    bgr = resized;
  }
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  auto hwc = torch::from_blob(rgb.data, {rgb.rows, rgb.cols, 3}, torch::kUInt8);
  return hwc.permute({2, 0, 1}).contiguous().clone();
}

void write_image(const fs::path& path, const torch::Tensor& image, ValueRange range) {
  if (image.dim() != 3 || image.size(0) != 3) {
    throw Error(ErrorKind::kShapeMismatch, "write_image expects (3, h, w)");
  }
  auto scaled = image.detach().to(torch::kFloat32).sub(range.lo).div(range.hi - range.lo);
  auto bytes = scaled.mul(255.0).round().clamp(0, 255).to(torch::kUInt8);
  auto hwc = bytes.permute({1, 2, 0}).contiguous();
  cv::Mat rgb(static_cast<int>(hwc.size(0)), static_cast<int>(hwc.size(1)), CV_8UC3,
              hwc.data_ptr<uint8_t>());
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), bgr)) {
    throw Error(ErrorKind::kIoError, "cannot write " + path.string());
  }
}

ImageBatch load_batch(const SplitManifest& manifest, std::span<const std::string> ids,
                      Resolution resolution) {
  if (ids.empty()) throw Error(ErrorKind::kEmptyRequest, "load_batch called with no ids");
  for (const auto& id : ids) {
    if (!manifest.contains(id)) {
      throw Error(ErrorKind::kUnknownId, "'" + id + "' is not in the manifest");
    }
  }
  return ImageBatch(bytes_to_unit_range(decode_all(ids, resolution)));
}

ImageStore::ImageStore(std::vector<std::string> ids, torch::Tensor bytes)
    : ids_(std::move(ids)), bytes_(std::move(bytes)) {
  if (bytes_.dim() != 4 || bytes_.size(0) != static_cast<int64_t>(ids_.size()) ||
      bytes_.scalar_type() != torch::kUInt8) {
    throw Error(ErrorKind::kShapeMismatch, "image store expects uint8 (n, c, h, w) matching ids");
  }
  for (size_t i = 0; i < ids_.size(); ++i) {
    if (!lookup_.emplace(ids_[i], static_cast<int64_t>(i)).second) {
      throw Error(ErrorKind::kFormatError, "duplicate id '" + ids_[i] + "' in image store");
    }
  }
}

ImageStore ImageStore::load(const SplitManifest& manifest, Resolution resolution) {
  std::vector<std::string> ids = manifest.source_items();
  ids.insert(ids.end(), manifest.target_items().begin(), manifest.target_items().end());
  if (ids.empty()) throw Error(ErrorKind::kEmptyRequest, "manifest holds no items");
  auto bytes = decode_all(ids, resolution);
  return ImageStore(std::move(ids), std::move(bytes));
}

Resolution ImageStore::resolution() const {
  if (!bytes_.defined()) return {0, 0};
  return {bytes_.size(2), bytes_.size(3)};
}

int64_t ImageStore::index_of(const std::string& id) const {
  auto it = lookup_.find(id);
  if (it == lookup_.end()) throw Error(ErrorKind::kUnknownId, "'" + id + "' is not loaded");
  return it->second;
}

torch::Tensor ImageStore::gather(std::span<const int64_t> positions) const {
  if (positions.empty()) throw Error(ErrorKind::kEmptyRequest, "gather called with no positions");
  auto index = torch::tensor(std::vector<int64_t>(positions.begin(), positions.end()), torch::kInt64);
  return bytes_to_unit_range(bytes_.index_select(0, index));
}

torch::Tensor ImageStore::gather_ids(std::span<const std::string> ids) const {
  std::vector<int64_t> positions;
  positions.reserve(ids.size());
  for (const auto& id : ids) positions.push_back(index_of(id));
  return gather(positions);
}

}  // namespace balagan
