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

#include "balagan/tensor_archive.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "balagan/error.hpp"

namespace balagan {

namespace {

constexpr char kMagic[8] = {'B', 'L', 'G', 'N', 'A', 'R', 'C', '1'};

std::string dtype_name(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat32: return "float32";
    case torch::kFloat64: return "float64";
    case torch::kInt64: return "int64";
    case torch::kUInt8: return "uint8";
    default: throw Error(ErrorKind::kFormatError, "unsupported archive dtype");
  }
}

torch::ScalarType dtype_from(const std::string& name) {
  if (name == "float32") return torch::kFloat32;
  if (name == "float64") return torch::kFloat64;
  if (name == "int64") return torch::kInt64;
  if (name == "uint8") return torch::kUInt8;
  throw Error(ErrorKind::kFormatError, "unknown archive dtype '" + name + "'");
}

}  // namespace

void TensorArchive::add(const std::string& name, const torch::Tensor& tensor) {
  if (has(name)) throw Error(ErrorKind::kFormatError, "duplicate archive entry " + name);
  entries_.emplace_back(name, tensor.detach().cpu().contiguous().clone());
}

void TensorArchive::add_all(const std::vector<std::pair<std::string, torch::Tensor>>& tensors,
                            const std::string& prefix) {
  for (const auto& [name, t] : tensors) add(prefix + name, t);
}

bool TensorArchive::has(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.first == name) return true;
  }
  return false;
}

const torch::Tensor& TensorArchive::get(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.first == name) return e.second;
  }
  throw Error(ErrorKind::kFormatError, "archive has no entry " + name);
}

std::vector<std::pair<std::string, torch::Tensor>> TensorArchive::with_prefix(
    const std::string& prefix) const {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  for (const auto& [name, t] : entries_) {
    if (name.rfind(prefix, 0) == 0) out.emplace_back(name.substr(prefix.size()), t);
  }
  return out;
}

std::string TensorArchive::to_bytes() const {
  nlohmann::json table = nlohmann::json::array();
  uint64_t offset = 0;
  for (const auto& [name, t] : entries_) {
    const uint64_t nbytes = t.numel() * t.element_size();
    table.push_back({{"name", name},
                     {"dtype", dtype_name(t.scalar_type())},
                     {"shape", t.sizes().vec()},
                     {"offset", offset},
                     {"bytes", nbytes}});
    offset += nbytes;
  }
  const nlohmann::json header{{"version", kVersion}, {"meta", meta_}, {"tensors", table}};
  const std::string header_text = header.dump();
  const uint64_t header_size = header_text.size();

  std::string out;
  out.reserve(sizeof(kMagic) + sizeof(header_size) + header_text.size() + offset);
  out.append(kMagic, sizeof(kMagic));
  out.append(reinterpret_cast<const char*>(&header_size), sizeof(header_size));
  out.append(header_text);
  for (const auto& [name, t] : entries_) {
    out.append(static_cast<const char*>(t.data_ptr()), t.numel() * t.element_size());
  }
  return out;
}

TensorArchive TensorArchive::from_bytes(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) + sizeof(uint64_t) ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorKind::kFormatError, "not a tensor archive (bad magic)");
  }
  uint64_t header_size = 0;
  std::memcpy(&header_size, bytes.data() + sizeof(kMagic), sizeof(header_size));
  const size_t payload_start = sizeof(kMagic) + sizeof(header_size) + header_size;
  if (payload_start > bytes.size()) throw Error(ErrorKind::kFormatError, "truncated archive header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(sizeof(kMagic) + sizeof(header_size), header_size));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormatError, std::string("archive header: ") + e.what());
  }
  if (header.value("version", 0) != kVersion) {
    throw Error(ErrorKind::kFormatError, "unsupported archive version");
  }
  TensorArchive archive;
  archive.meta_ = header.at("meta");
  for (const auto& entry : header.at("tensors")) {
    const auto offset = entry.at("offset").get<uint64_t>();
    const auto nbytes = entry.at("bytes").get<uint64_t>();
    if (payload_start + offset + nbytes > bytes.size()) {
      throw Error(ErrorKind::kFormatError, "truncated archive payload");
    }
    const auto shape = entry.at("shape").get<std::vector<int64_t>>();
    auto t = torch::empty(shape, torch::TensorOptions().dtype(dtype_from(entry.at("dtype"))));
    if (static_cast<uint64_t>(t.numel() * t.element_size()) != nbytes) {
      throw Error(ErrorKind::kFormatError, "archive entry size mismatch");
    }
    std::memcpy(t.data_ptr(), bytes.data() + payload_start + offset, nbytes);
    archive.entries_.emplace_back(entry.at("name").get<std::string>(), std::move(t));
  }
  return archive;
}

void TensorArchive::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  // write-then-rename so an interrupted save never leaves a torn checkpoint
  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIoError, "cannot write " + tmp.string());
    const auto bytes = to_bytes();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::kIoError, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

TensorArchive TensorArchive::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoError, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_bytes(buffer.str());
}

void store_module_state(const torch::nn::Module& module, TensorArchive& archive,
                        const std::string& prefix) {
  for (const auto& item : module.named_parameters(true)) archive.add(prefix + item.key(), item.value());
  for (const auto& item : module.named_buffers(true)) archive.add(prefix + item.key(), item.value());
}

void load_module_state(torch::nn::Module& module, const TensorArchive& archive,
                       const std::string& prefix) {
  torch::NoGradGuard no_grad;
  auto copy_into = [&](const std::string& name, torch::Tensor& dst) {
    const auto& src = archive.get(prefix + name);
    if (src.sizes() != dst.sizes()) {
      throw Error(ErrorKind::kFormatError, "shape mismatch for " + prefix + name);
    }
    dst.copy_(src);
  };
  for (auto& item : module.named_parameters(true)) copy_into(item.key(), item.value());
  for (auto& item : module.named_buffers(true)) copy_into(item.key(), item.value());
}

}  // namespace balagan
