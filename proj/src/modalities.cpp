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

#include "balagan/modalities.hpp"

#include <fstream>
#include <sstream>

#include "balagan/error.hpp"

namespace balagan {

bool k_satisfies_balance_rule(int64_t n_source, int64_t n_target, int64_t k) {
  return k >= 1 && n_target * k >= n_source;
}

int64_t choose_k(int64_t n_source, int64_t n_target, std::optional<int64_t> override_k,
                 bool allow_invalid_override) {
  if (n_source < 1 || n_target < 1) {
    throw Error(ErrorKind::kConfigError, "choose_k needs non-empty source and target pools");
  }
  if (!override_k) return (n_source + n_target - 1) / n_target;
  const int64_t k = *override_k;
  if (k < 1 || k > n_source) {
    throw Error(ErrorKind::kInvalidK, "k=" + std::to_string(k) + " must lie in [1, |A|=" +
                                          std::to_string(n_source) + "]");
  }
  if (!k_satisfies_balance_rule(n_source, n_target, k) && !allow_invalid_override) {
    throw Error(ErrorKind::kInvalidK, "k=" + std::to_string(k) + " violates |B| >= |A|/k (" +
                                          std::to_string(n_target) + " < " +
                                          std::to_string(n_source) + "/" + std::to_string(k) + ")");
  }
  return k;
}

std::string_view to_string(ClassMode mode) {
  return mode == ClassMode::kImbalanced ? "imbalanced" : "balanced";
}

ClassMode parse_class_mode(std::string_view text) {
  if (text == "imbalanced") return ClassMode::kImbalanced;
  if (text == "balanced") return ClassMode::kBalanced;
  throw Error(ErrorKind::kConfigError, "mode must be 'imbalanced' or 'balanced', got '" +
                                           std::string(text) + "'");
}

std::optional<int64_t> ModalityAssignment::class_of(const std::string& id) const {
  for (const auto& [entry_id, cls] : entries) {
    if (entry_id == id) return cls;
  }
  return std::nullopt;
}

std::vector<int64_t> ModalityAssignment::histogram() const {
  std::vector<int64_t> counts(static_cast<size_t>(n_classes()), 0);
  for (const auto& [id, cls] : entries) {
    if (cls >= 0 && cls < n_classes()) ++counts[static_cast<size_t>(cls)];
  }
  return counts;
}

std::string ModalityAssignment::serialize() const {
  std::ostringstream out;
  out << "#balagan-assign 1\n";
  out << "#mode=" << to_string(mode) << "\n";
  out << "#k=" << k_source << "\n";
  out << "#k_target=" << k_target << "\n";
  out << "#seed=" << seed << "\n";
  out << "#encoder=" << encoder_hash << "\n";
  for (const auto& [id, cls] : entries) out << id << "\t" << cls << "\n";
  return out.str();
}

ModalityAssignment ModalityAssignment::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  size_t line_no = 0;
  auto fail = [&](const std::string& what) -> void {
    throw Error(ErrorKind::kFormatError, "assignment line " + std::to_string(line_no) + ": " + what);
  };
  auto header = [&](const std::string& key) -> std::string {
    if (!std::getline(in, line)) fail("missing #" + key);
    ++line_no;
    const std::string prefix = "#" + key + "=";
    if (line.rfind(prefix, 0) != 0) fail("expected " + prefix);
    return line.substr(prefix.size());
  };
  if (!std::getline(in, line) || line != "#balagan-assign 1") {
    ++line_no;
    fail("unsupported header");
  }
  ++line_no;
  ModalityAssignment a;
  try {
    a.mode = parse_class_mode(header("mode"));
    a.k_source = std::stoll(header("k"));
    a.k_target = std::stoll(header("k_target"));
    a.seed = std::stoull(header("seed"));
  } catch (const std::logic_error&) {
    fail("malformed number");
  }
  a.encoder_hash = header("encoder");
  if (a.k_source < 1 || a.k_target < 1 || (a.mode == ClassMode::kImbalanced && a.k_target != 1)) {
    fail("invalid class counts for mode " + std::string(to_string(a.mode)));
  }
  while (std::getline(in, line)) {
    ++line_no;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos || tab == 0) fail("expected '<id>\\t<class>'");
    int64_t cls = 0;
    try {
      size_t used = 0;
      cls = std::stoll(line.substr(tab + 1), &used);
      if (used != line.size() - tab - 1) fail("trailing characters after class index");
    } catch (const std::logic_error&) {
      fail("malformed class index");
    }
    a.entries.emplace_back(line.substr(0, tab), cls);
  }
  return a;
}

void ModalityAssignment::write(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIoError, "cannot write " + path.string());
  out << serialize();
}

ModalityAssignment ModalityAssignment::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoError, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

torch::Tensor embed_positions(StyleEncoder& encoder, const ImageStore& store,
                              std::span<const int64_t> positions, bool use_projection,
                              int64_t batch_size) {
  std::vector<torch::Tensor> chunks;
  for (size_t begin = 0; begin < positions.size(); begin += static_cast<size_t>(batch_size)) {
    const auto end = std::min(positions.size(), begin + static_cast<size_t>(batch_size));
    ImageBatch batch(store.gather(positions.subspan(begin, end - begin)));
    chunks.push_back(embed(encoder, batch, use_projection));
  }
  return torch::cat(chunks);
}

namespace {

Eigen::MatrixXd to_eigen(const torch::Tensor& t) {
  auto d = t.to(torch::kFloat64).contiguous();
  Eigen::MatrixXd m(d.size(0), d.size(1));
  auto acc = d.accessor<double, 2>();
  for (int64_t i = 0; i < d.size(0); ++i) {
    for (int64_t j = 0; j < d.size(1); ++j) m(i, j) = acc[i][j];
  }
  return m;
}

ClusterModel cluster_pool(const std::vector<std::string>& ids, const ImageStore& store,
                          StyleEncoder& encoder, int64_t k, const DiscoveryOptions& options) {
  std::vector<int64_t> positions;
  positions.reserve(ids.size());
  for (const auto& id : ids) positions.push_back(store.index_of(id));
  if (static_cast<int64_t>(positions.size()) < k) {
    throw Error(ErrorKind::kTooFewPoints, std::to_string(positions.size()) + " images cannot form " +
                                              std::to_string(k) + " modalities");
  }
  const auto embeddings =
      embed_positions(encoder, store, positions, options.use_projection, options.embed_batch);
  return spherical_kmeans(to_eigen(embeddings), k, options.seed, options.max_iter, options.tol);
}

}  // namespace

DiscoveryResult assign_modalities(const SplitManifest& manifest, const ImageStore& store,
                                  StyleEncoder& encoder, int64_t k,
                                  const DiscoveryOptions& options, const std::string& encoder_hash) {
  if (k < 1) throw Error(ErrorKind::kInvalidK, "k must be >= 1");
  DiscoveryResult result;
  result.source_clusters = cluster_pool(manifest.source_items(), store, encoder, k, options);
  auto& a = result.assignment;
  a.mode = ClassMode::kImbalanced;
  a.k_source = k;
  a.k_target = 1;
  a.seed = options.seed;
  a.encoder_hash = encoder_hash;
  for (size_t i = 0; i < manifest.source_count(); ++i) {
    a.entries.emplace_back(manifest.source_items()[i], result.source_clusters.assignments[i]);
  }
  for (const auto& id : manifest.target_items()) a.entries.emplace_back(id, k);
  return result;
}

DiscoveryResult assign_modalities_balanced(const SplitManifest& manifest, const ImageStore& store,
                                           StyleEncoder& encoder, int64_t k_source,
                                           int64_t k_target, const DiscoveryOptions& options,
                                           const std::string& encoder_hash) {
  if (k_source < 1 || k_target < 1) throw Error(ErrorKind::kInvalidK, "k_s and k_t must be >= 1");
  DiscoveryResult result;
  result.source_clusters = cluster_pool(manifest.source_items(), store, encoder, k_source, options);
  result.target_clusters = cluster_pool(manifest.target_items(), store, encoder, k_target, options);
  auto& a = result.assignment;
  a.mode = ClassMode::kBalanced;
  a.k_source = k_source;
  a.k_target = k_target;
  a.seed = options.seed;
  a.encoder_hash = encoder_hash;
  for (size_t i = 0; i < manifest.source_count(); ++i) {
    a.entries.emplace_back(manifest.source_items()[i], result.source_clusters.assignments[i]);
  }
  for (size_t i = 0; i < manifest.target_count(); ++i) {
    a.entries.emplace_back(manifest.target_items()[i], k_source + result.target_clusters->assignments[i]);
  }
  return result;
}

}  // namespace balagan
