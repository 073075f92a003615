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

#include "balagan/pipeline.hpp"

#include "balagan/error.hpp"
#include "balagan/hash.hpp"

namespace balagan {

SplitManifest resolve_manifest(const RunConfig& config) {
  const auto& d = config.data;
  if (!d.manifest.empty()) return SplitManifest::read(d.manifest);
  if (d.source_dir.empty() || d.target_dir.empty()) {
    throw Error(ErrorKind::kConfigError, "data needs a manifest or both source_dir and target_dir");
  }
  const auto index = index_domain_directories(d.source_dir, d.target_dir);
  size_t n_source = 0, n_target = 0;
  for (const auto& item : index) (item.domain == Domain::kSource ? n_source : n_target)++;
  if (d.n_source > 0) n_source = static_cast<size_t>(d.n_source);
  if (d.n_target > 0) n_target = static_cast<size_t>(d.n_target);
  return build_imbalanced_split(index, n_source, n_target, config.seed);
}

int64_t resolve_k(const RunConfig& config, const SplitManifest& manifest) {
  return choose_k(static_cast<int64_t>(manifest.source_count()),
                  static_cast<int64_t>(manifest.target_count()), config.modalities.k,
                  config.modalities.allow_invalid_k);
}

EncoderRun train_encoder(const RunConfig& config, const SplitManifest& manifest,
                         const ImageStore& store) {
  const auto& m = config.modalities;
  auto options = m.contrastive;
  options.seed = config.seed;
  auto augment = m.augment;
  augment.rng_seed = config.seed;
  auto trained = train_style_encoder(manifest, store, augment, options, m.encoder,
                                     m.mode == ClassMode::kBalanced);
  EncoderRun run;
  run.encoder = trained.encoder;
  run.hash = sha256_hex(style_encoder_archive(run.encoder).to_bytes());
  run.initial_monitor_loss = trained.initial_monitor_loss;
  run.final_monitor_loss = trained.final_monitor_loss;
  return run;
}

DiscoveryResult discover(const RunConfig& config, const SplitManifest& manifest,
                         const ImageStore& store, EncoderRun& encoder, int64_t k) {
  const auto& m = config.modalities;
  DiscoveryOptions options;
  options.seed = config.seed;
  options.max_iter = m.max_iter;
  options.tol = m.tol;
  options.use_projection = m.use_projection;
  if (m.mode == ClassMode::kBalanced) {
    return assign_modalities_balanced(manifest, store, encoder.encoder, k, m.k_target, options,
                                      encoder.hash);
  }
  return assign_modalities(manifest, store, encoder.encoder, k, options, encoder.hash);
}

}  // namespace balagan
