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

#ifndef BALAGAN_TENSOR_ARCHIVE_HPP
#define BALAGAN_TENSOR_ARCHIVE_HPP

#include <torch/torch.h>

#include <filesystem>
#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

namespace balagan {

// Versioned binary container: a JSON header (metadata plus a tensor table)
// followed by the raw little-endian tensor payloads in table order.
//
//   "BLGNARC1" | u64 header_bytes | header JSON | payload
//
// Encoding is canonical: the same metadata and tensors always produce the
// same bytes, so save -> load -> save is byte-identical.
class TensorArchive {
 public:
  static constexpr int kVersion = 1;

  nlohmann::json& meta() { return meta_; }
  const nlohmann::json& meta() const { return meta_; }

  void add(const std::string& name, const torch::Tensor& tensor);
  void add_all(const std::vector<std::pair<std::string, torch::Tensor>>& tensors,
               const std::string& prefix = "");

  bool has(const std::string& name) const;
  const torch::Tensor& get(const std::string& name) const;
  // entries whose name starts with `prefix`, prefix stripped
  std::vector<std::pair<std::string, torch::Tensor>> with_prefix(const std::string& prefix) const;
  const std::vector<std::pair<std::string, torch::Tensor>>& entries() const { return entries_; }

  std::string to_bytes() const;
  static TensorArchive from_bytes(const std::string& bytes);

  void save(const std::filesystem::path& path) const;
  static TensorArchive load(const std::filesystem::path& path);

 private:
  nlohmann::json meta_ = nlohmann::json::object();
  std::vector<std::pair<std::string, torch::Tensor>> entries_;
};

// Copies archived values into the module's parameters and buffers by name.
// Throws FormatError on any missing name or shape mismatch.
void load_module_state(torch::nn::Module& module, const TensorArchive& archive,
                       const std::string& prefix);
void store_module_state(const torch::nn::Module& module, TensorArchive& archive,
                        const std::string& prefix);

}  // namespace balagan

#endif  // BALAGAN_TENSOR_ARCHIVE_HPP
