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

#include "balagan/evaluation.hpp"

#include "balagan/log.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "balagan/error.hpp"
#include "balagan/modalities.hpp"
#include "balagan/pipeline.hpp"
#include "balagan/trainer.hpp"

namespace balagan {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

Eigen::MatrixXd to_eigen(const torch::Tensor& features) {
  const auto f = features.to(torch::kFloat64).contiguous();
  Eigen::MatrixXd out(f.size(0), f.size(1));
  const double* p = f.data_ptr<double>();
  for (int64_t i = 0; i < f.size(0); ++i) {
    for (int64_t j = 0; j < f.size(1); ++j) out(i, j) = p[i * f.size(1) + j];
  }
  return out;
}

}  // namespace

ImageStream stream_tensor(torch::Tensor images, int64_t batch_size) {
  if (batch_size < 1) throw Error(ErrorKind::kConfigError, "batch size must be >= 1");
  auto cursor = std::make_shared<int64_t>(0);
  return [images = std::move(images), batch_size, cursor]() -> std::optional<torch::Tensor> {
    if (*cursor >= images.size(0)) return std::nullopt;
    const int64_t end = std::min(images.size(0), *cursor + batch_size);
    auto batch = images.slice(0, *cursor, end);
    *cursor = end;
    return batch;
  };
}

ActivationStats compute_activation_stats(const ImageStream& images, FeatureExtractor& extractor) {
  StatsAccumulator acc;
  while (auto batch = images()) acc.add(to_eigen(extractor.extract(*batch)));
  return acc.finalize();
}

ActivationStats compute_activation_stats(const torch::Tensor& images, FeatureExtractor& extractor,
                                         int64_t batch_size) {
  return compute_activation_stats(stream_tensor(images, batch_size), extractor);
}

std::string PairingManifest::serialize() const {
  std::string out = "#balagan-pairs 1\n#seed=" + std::to_string(seed) + "\n";
  for (const auto& [s, r] : pairs) out += s + "\t" + r + "\n";
  return out;
}

PairingManifest PairingManifest::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  auto fail = [](const std::string& what) { throw Error(ErrorKind::kFormatError, "pairing manifest: " + what); };
  if (!std::getline(in, line) || line != "#balagan-pairs 1") fail("bad header");
  PairingManifest m;
  if (!std::getline(in, line) || !line.starts_with("#seed=")) fail("missing seed");
  try {
    m.seed = std::stoull(line.substr(6));
  } catch (const std::exception&) {
    fail("bad seed");
  }
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) fail("bad line '" + line + "'");
    m.pairs.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return m;
}

PairingManifest make_pairing(std::span<const std::string> source_ids,
                             std::span<const std::string> reference_ids, uint64_t seed) {
  if (source_ids.empty() || reference_ids.empty()) {
    throw Error(ErrorKind::kEmptyRequest, "translation needs at least one source and one reference");
  }
  PairingManifest m;
  m.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<size_t> pick(0, reference_ids.size() - 1);
  for (const auto& s : source_ids) m.pairs.emplace_back(s, reference_ids[pick(rng)]);
  return m;
}

Translation translate_dataset(Generator& g, const ImageStore& store,
                              std::span<const std::string> source_ids,
                              std::span<const std::string> reference_ids, uint64_t pairing_seed,
                              int64_t batch_size) {
  Translation t;
  t.pairing = make_pairing(source_ids, reference_ids, pairing_seed);
  torch::NoGradGuard no_grad;
  std::vector<torch::Tensor> chunks;
  const auto n = static_cast<int64_t>(t.pairing.pairs.size());
  for (int64_t begin = 0; begin < n; begin += batch_size) {
    const int64_t end = std::min(n, begin + batch_size);
    std::vector<std::string> src, ref;
    for (int64_t i = begin; i < end; ++i) {
      src.push_back(t.pairing.pairs[static_cast<size_t>(i)].first);
      ref.push_back(t.pairing.pairs[static_cast<size_t>(i)].second);
    }
    chunks.push_back(g->forward(store.gather_ids(src), store.gather_ids(ref)));
  }
  t.images = torch::cat(chunks);
  return t;
}

void write_translation(const Translation& t, const fs::path& dir) {
  fs::create_directories(dir);
  for (size_t i = 0; i < t.pairing.pairs.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.png", i);
    write_image(dir / name, t.images[static_cast<int64_t>(i)]);
  }
  std::ofstream(dir / "pairs.tsv", std::ios::binary | std::ios::trunc) << t.pairing.serialize();
}

DiversityGrid diversity_grid(Generator& g, const torch::Tensor& sources,
                             const torch::Tensor& references, int64_t gutter, float gutter_value) {
  if (sources.size(0) == 0 || references.size(0) == 0) {
    throw Error(ErrorKind::kEmptyRequest, "diversity grid needs sources and references");
  }
  if (gutter < 0) throw Error(ErrorKind::kConfigError, "gutter must be >= 0");
  const int64_t m = sources.size(0), n = references.size(0);
  const int64_t h = sources.size(2), w = sources.size(3);
  torch::NoGradGuard no_grad;
  auto x = sources.repeat_interleave(n, 0);
  auto y = references.repeat({m, 1, 1, 1});
  DiversityGrid grid;
  grid.cells = g->forward(x, y).reshape({m, n, 3, h, w});
  grid.composite = torch::full({3, m * h + (m - 1) * gutter, n * w + (n - 1) * gutter}, gutter_value,
                               grid.cells.options());
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      grid.composite.slice(1, i * (h + gutter), i * (h + gutter) + h)
          .slice(2, j * (w + gutter), j * (w + gutter) + w)
          .copy_(grid.cells[i][j]);
    }
  }
  return grid;
}

json FidReport::to_json() const {
  return json{{"extractor_id", extractor_id}, {"n_real", n_real}, {"n_fake", n_fake}, {"fid", fid}};
}

FidReport fid_report(FeatureExtractor& extractor, const torch::Tensor& real,
                     const torch::Tensor& fake, int64_t batch_size) {
  FidReport r;
  r.extractor_id = extractor.id();
  r.n_real = real.size(0);
  r.n_fake = fake.size(0);
  r.fid = fid(compute_activation_stats(real, extractor, batch_size),
              compute_activation_stats(fake, extractor, batch_size));
  return r;
}

FidReport evaluate_translation(Generator& g, const SplitManifest& manifest, const ImageStore& store,
                               const EvaluationSection& options, FeatureExtractor& extractor) {
  std::vector<std::string> sources = manifest.source_items();
  if (options.n_fake > 0 && options.n_fake < static_cast<int64_t>(sources.size())) {
    std::mt19937_64 rng(options.pairing_seed);
    std::shuffle(sources.begin(), sources.end(), rng);
    sources.resize(static_cast<size_t>(options.n_fake));
  }
  const auto& targets = manifest.target_items();
  const auto fake = translate_dataset(g, store, sources, targets, options.pairing_seed,
                                      options.batch_size);
  return fid_report(extractor, store.gather_ids(targets), fake.images, options.batch_size);
}

std::string sweep_table(std::span<const SweepRow> rows) {
  std::ostringstream out;
  out.precision(17);
  out << "k\tfid\terror\n";
  for (const auto& r : rows) {
    out << r.k << "\t";
    if (r.fid) out << *r.fid;
    else out << "nan";
    out << "\t" << r.error << "\n";
  }
  return out.str();
}

std::vector<SweepRow> k_sweep(const RunConfig& config, std::span<const int64_t> k_values,
                              const SplitManifest& manifest, const ImageStore& store,
                              const fs::path& out_dir, const SweepOptions& options) {
  if (k_values.empty()) throw Error(ErrorKind::kEmptyRequest, "k sweep needs at least one k");
  std::set<int64_t> seen;
  for (const auto k : k_values) {
    if (!seen.insert(k).second) {
      throw Error(ErrorKind::kDuplicateK, "k=" + std::to_string(k) + " appears twice in the sweep");
    }
  }
  for (const auto k : k_values) {
    choose_k(static_cast<int64_t>(manifest.source_count()),
             static_cast<int64_t>(manifest.target_count()), k, config.modalities.allow_invalid_k);
  }
  config.validate();
  fs::create_directories(out_dir);
  auto encoder = train_encoder(config, manifest, store);
  auto extractor = make_extractor(config.evaluation.extractor, config.evaluation.extractor_seed,
                                  config.evaluation.extractor_path);

  std::vector<SweepRow> rows;
  for (const auto k : k_values) {
    SweepRow row;
    row.k = k;
    RunConfig cfg = config;
    cfg.modalities.k = k;
    cfg.name = config.name + "-k" + std::to_string(k);
    row.run_dir = out_dir / cfg.name;
    try {
      const auto found = discover(cfg, manifest, store, encoder, k);
      fs::create_directories(row.run_dir);
      found.assignment.write(row.run_dir / "modalities.assign");
      const auto outcome = train(cfg, manifest, found.assignment, store, row.run_dir);
      auto state = load_checkpoint(outcome.final_checkpoint);
      const auto report =
          evaluate_translation(eval_generator(state), manifest, store, cfg.evaluation, *extractor);
      std::ofstream(row.run_dir / "fid.json", std::ios::trunc) << report.to_json().dump(2) << "\n";
      row.fid = report.fid;
    } catch (const std::exception& e) {
      row.error = e.what();
      log::error("k=", k, " failed: ", row.error);
    }
    if (options.on_row) options.on_row(row);
    rows.push_back(std::move(row));
  }

  std::ofstream(out_dir / "sweep.tsv", std::ios::binary | std::ios::trunc) << sweep_table(rows);
  json plot = json::array();
  for (const auto& r : rows) {
    plot.push_back({{"k", r.k}, {"fid", r.fid ? json(*r.fid) : json(nullptr)}, {"error", r.error}});
  }
  std::ofstream(out_dir / "sweep.json", std::ios::trunc) << plot.dump(2) << "\n";
  return rows;
}

}  // namespace balagan
