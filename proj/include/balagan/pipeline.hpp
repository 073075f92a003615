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

#ifndef BALAGAN_PIPELINE_HPP
#define BALAGAN_PIPELINE_HPP

#include <cstdint>
#include <string>

#include "balagan/image_io.hpp"
#include "balagan/modalities.hpp"
#include "balagan/run_config.hpp"
#include "balagan/split_manifest.hpp"
#include "balagan/style_encoder.hpp"

namespace balagan {

// The manifest named by `data.manifest`, or a fresh split of the data
// directories (counts of 0 take the whole pool).
SplitManifest resolve_manifest(const RunConfig& config);

// modalities.k, or the minimal valid k for the manifest.
int64_t resolve_k(const RunConfig& config, const SplitManifest& manifest);

struct EncoderRun {
  StyleEncoder encoder{nullptr};
  std::string hash;  // sha256 of the encoder checkpoint bytes
  double initial_monitor_loss = 0;
  double final_monitor_loss = 0;
};

// Contrastive training on the domains that get clustered (the source pool,
// plus the target pool in the balanced setting).
EncoderRun train_encoder(const RunConfig& config, const SplitManifest& manifest,
                         const ImageStore& store);

DiscoveryResult discover(const RunConfig& config, const SplitManifest& manifest,
                         const ImageStore& store, EncoderRun& encoder, int64_t k);

}  // namespace balagan

#endif  // BALAGAN_PIPELINE_HPP
