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

#include "balagan/split_manifest.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "balagan/error.hpp"

namespace balagan {

namespace fs = std::filesystem;

char domain_tag(Domain domain) { return domain == Domain::kSource ? 'A' : 'B'; }

SplitManifest::SplitManifest(std::vector<std::string> source_items,
                             std::vector<std::string> target_items, uint64_t seed)
    : source_(std::move(source_items)), target_(std::move(target_items)), seed_(seed) {
  for (const auto& id : source_) {
    if (id.empty() || id.find_first_of("\t\n") != std::string::npos) {
      throw Error(ErrorKind::kFormatError, "item id must be non-empty without tabs/newlines");
    }
    if (!lookup_.emplace(id, Domain::kSource).second) {
      throw Error(ErrorKind::kFormatError, "duplicate source item '" + id + "'");
    }
  }
  for (const auto& id : target_) {
    if (id.empty() || id.find_first_of("\t\n") != std::string::npos) {
      throw Error(ErrorKind::kFormatError, "item id must be non-empty without tabs/newlines");
    }
    if (!lookup_.emplace(id, Domain::kTarget).second) {
      throw Error(ErrorKind::kFormatError,
                  "item '" + id + "' appears twice or in both source and target pools");
    }
  }
}

std::optional<Domain> SplitManifest::domain_of(std::string_view id) const {
  auto it = lookup_.find(std::string(id));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::string SplitManifest::serialize() const {
  std::ostringstream out;
  out << "balagan-manifest " << kFormatVersion << "\n";
  out << "seed " << seed_ << "\n";
  out << "count A " << source_.size() << "\n";
  out << "count B " << target_.size() << "\n";
  for (const auto& id : source_) out << "A\t" << id << "\n";
  for (const auto& id : target_) out << "B\t" << id << "\n";
  return out.str();
}

namespace {

[[noreturn]] void bad_manifest(size_t line_no, const std::string& what) {
  throw Error(ErrorKind::kFormatError, "manifest line " + std::to_string(line_no) + ": " + what);
}

uint64_t parse_u64(const std::string& text, size_t line_no) {
  try {
    size_t used = 0;
    const auto value = std::stoull(text, &used);
    if (used != text.size()) bad_manifest(line_no, "trailing characters in number");
    return value;
  } catch (const std::logic_error&) {
    bad_manifest(line_no, "expected an unsigned integer, got '" + text + "'");
  }
}

}  // namespace

SplitManifest SplitManifest::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  size_t line_no = 0;
  auto next = [&](const char* what) -> std::string {
    if (!std::getline(in, line)) bad_manifest(line_no + 1, std::string("missing ") + what);
    ++line_no;
    return line;
  };

  if (next("header") != "balagan-manifest " + std::to_string(kFormatVersion)) {
    bad_manifest(line_no, "unsupported header '" + line + "'");
  }
  auto seed_line = next("seed");
  if (seed_line.rfind("seed ", 0) != 0) bad_manifest(line_no, "expected 'seed <n>'");
  const auto seed = parse_u64(seed_line.substr(5), line_no);
  auto count_a = next("count A");
  if (count_a.rfind("count A ", 0) != 0) bad_manifest(line_no, "expected 'count A <n>'");
  const auto n_a = parse_u64(count_a.substr(8), line_no);
  auto count_b = next("count B");
  if (count_b.rfind("count B ", 0) != 0) bad_manifest(line_no, "expected 'count B <n>'");
  const auto n_b = parse_u64(count_b.substr(8), line_no);

  std::vector<std::string> source, target;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.size() < 3 || line[1] != '\t' || (line[0] != 'A' && line[0] != 'B')) {
      bad_manifest(line_no, "expected '<A|B>\\t<id>'");
    }
    if (line[0] == 'A') {
      if (!target.empty()) bad_manifest(line_no, "source items must precede target items");
      source.push_back(line.substr(2));
    } else {
      target.push_back(line.substr(2));
    }
  }
  if (source.size() != n_a || target.size() != n_b) {
    throw Error(ErrorKind::kFormatError, "manifest counts (" + std::to_string(n_a) + ", " +
                                             std::to_string(n_b) + ") do not match items (" +
                                             std::to_string(source.size()) + ", " +
                                             std::to_string(target.size()) + ")");
  }
  return SplitManifest(std::move(source), std::move(target), seed);
}

void SplitManifest::write(const fs::path& path) const {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIoError, "cannot write " + path.string());
  out << serialize();
}

SplitManifest SplitManifest::read(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoError, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

SplitManifest build_imbalanced_split(std::span<const LabeledItem> index, size_t n_source,
                                     size_t n_target, uint64_t seed) {
  std::set<std::string> source_pool, target_pool;
  for (const auto& item : index) {
    (item.domain == Domain::kSource ? source_pool : target_pool).insert(item.id);
  }
  for (const auto& id : source_pool) {
    if (target_pool.count(id)) {
      throw Error(ErrorKind::kFormatError, "item '" + id + "' is tagged with both domains");
    }
  }
  if (source_pool.size() < n_source || target_pool.size() < n_target) {
    std::ostringstream msg;
    msg << "requested |A|=" << n_source << ", |B|=" << n_target << " but pools hold "
        << source_pool.size() << " and " << target_pool.size() << " (shortfall A="
        << (n_source > source_pool.size() ? n_source - source_pool.size() : 0)
        << ", B=" << (n_target > target_pool.size() ? n_target - target_pool.size() : 0)
        << ")";
    throw Error(ErrorKind::kInsufficientData, msg.str());
  }

  std::mt19937_64 rng(seed);
  auto draw = [&rng](const std::set<std::string>& pool, size_t n) {
    std::vector<std::string> items(pool.begin(), pool.end());
    std::shuffle(items.begin(), items.end(), rng);
    items.resize(n);
    std::sort(items.begin(), items.end());
    return items;
  };
  auto source = draw(source_pool, n_source);
  auto target = draw(target_pool, n_target);
  return SplitManifest(std::move(source), std::move(target), seed);
}

std::vector<std::string> list_image_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorKind::kIoError, "not a directory: " + dir.string());
  }
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") {
      files.push_back((dir / entry.path().filename()).string());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<LabeledItem> index_domain_directories(const fs::path& source_dir,
                                                  const fs::path& target_dir) {
  std::vector<LabeledItem> index;
  for (auto& f : list_image_files(source_dir)) index.push_back({std::move(f), Domain::kSource});
  for (auto& f : list_image_files(target_dir)) index.push_back({std::move(f), Domain::kTarget});
  return index;
}

}  // namespace balagan
