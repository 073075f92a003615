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

#ifndef BALAGAN_SPLIT_MANIFEST_HPP
#define BALAGAN_SPLIT_MANIFEST_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace balagan {

// A is the rich source domain, B the data-poor target domain.
enum class Domain { kSource, kTarget };

char domain_tag(Domain domain);

struct LabeledItem {
  std::string id;
  Domain domain;
};

// Immutable record of which items form the source and target pools.
//
// Canonical text form (one item per line, tab separated):
//
//   balagan-manifest 1
//   seed <u64>
//   count A <n>
//   count B <n>
//   A <id>
//   ...
//   B <id>
//
// `parse(serialize(m)) == m` and `serialize(parse(text)) == text` for any
// canonical text.
class SplitManifest {
 public:
  static constexpr int kFormatVersion = 1;

  SplitManifest(std::vector<std::string> source_items, std::vector<std::string> target_items,
                uint64_t seed);

  const std::vector<std::string>& source_items() const { return source_; }
  const std::vector<std::string>& target_items() const { return target_; }
  uint64_t seed() const { return seed_; }
  size_t source_count() const { return source_.size(); }
  size_t target_count() const { return target_.size(); }

  // True when either pool is empty; downstream training needs both.
  bool degenerate() const { return source_.empty() || target_.empty(); }

  std::optional<Domain> domain_of(std::string_view id) const;
  bool contains(std::string_view id) const { return domain_of(id).has_value(); }

  std::string serialize() const;
  static SplitManifest parse(std::string_view text);

  void write(const std::filesystem::path& path) const;
  static SplitManifest read(const std::filesystem::path& path);

  bool operator==(const SplitManifest& other) const {
    return seed_ == other.seed_ && source_ == other.source_ && target_ == other.target_;
  }

 private:
  std::vector<std::string> source_;
  std::vector<std::string> target_;
  uint64_t seed_;
  std::unordered_map<std::string, Domain> lookup_;
};

// Samples, without replacement, `n_source` A-items and `n_target` B-items.
// The result depends only on the *set* of items in `index`, the counts and
// the seed; the input order is irrelevant. Throws InsufficientData with the
// shortfall of each pool.
SplitManifest build_imbalanced_split(std::span<const LabeledItem> index, size_t n_source,
                                     size_t n_target, uint64_t seed);

// Lists `*.png` / `*.jpg` / `*.jpeg` files directly under each directory,
// tagged with their domain. Paths are returned as given joined with the file
// name, sorted lexicographically.
std::vector<LabeledItem> index_domain_directories(const std::filesystem::path& source_dir,
                                                  const std::filesystem::path& target_dir);

std::vector<std::string> list_image_files(const std::filesystem::path& dir);

}  // namespace balagan

#endif  // BALAGAN_SPLIT_MANIFEST_HPP
