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

#ifndef BALAGAN_CLASS_SET_HPP
#define BALAGAN_CLASS_SET_HPP

#include <torch/torch.h>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "balagan/image_io.hpp"
#include "balagan/modalities.hpp"
#include "balagan/split_manifest.hpp"

namespace balagan {

struct ClassDescriptor {
  int64_t index = 0;
  std::string name;  // "A1".."Ak", then "B" or "B1".."Bk_t"
  Domain domain = Domain::kSource;
  std::vector<std::string> members;
};

// Ordered classes the translator is trained over: [A_1..A_k, B] in the
// imbalanced setting, [A_1..A_ks, B_1..B_kt] in the balanced one. Every
// ordered pair of classes is a translation task.
struct ClassSet {
  ClassMode mode = ClassMode::kImbalanced;
  std::vector<ClassDescriptor> classes;

  int64_t n_classes() const { return static_cast<int64_t>(classes.size()); }
  int64_t trainable_pairs() const { return n_classes() * n_classes(); }
  bool is_target(int64_t cls) const { return classes.at(static_cast<size_t>(cls)).domain == Domain::kTarget; }
};

// Validates the assignment against `mode` (and the manifest's domains when
// given) and groups ids by class. `k_source` / `k_target`, when provided,
// must match the assignment header. Throws InconsistentAssignment.
ClassSet build_class_set(const ModalityAssignment& assignment, ClassMode mode,
                         std::optional<int64_t> k_source = {}, std::optional<int64_t> k_target = {},
                         const SplitManifest* manifest = nullptr);

enum class SamplingMode {
  kClassUniform,  // class uniform over the eligible classes, then image uniform within it
  kImageUniform,  // image uniform over all eligible images
};

std::string_view to_string(SamplingMode mode);
SamplingMode parse_sampling_mode(std::string_view text);

struct SampledPairs {
  std::vector<int64_t> source_labels;
  std::vector<int64_t> reference_labels;
  std::vector<std::string> source_ids;
  std::vector<std::string> reference_ids;
};

// Draws `batch_size` independent (x, y) pairs. With `include_target` false
// the target classes are never drawn. Throws EmptyClass when an eligible
// class has no members.
SampledPairs sample_pairs(const ClassSet& classes, int64_t batch_size, std::mt19937_64& rng,
                          SamplingMode mode = SamplingMode::kClassUniform, bool include_target = true);

struct TrainingBatch {
  torch::Tensor sources;     // (n, 3, h, w) in [-1, 1]
  torch::Tensor references;  // (n, 3, h, w)
  std::vector<int64_t> source_labels;
  std::vector<int64_t> reference_labels;
  std::vector<std::string> source_ids;
  std::vector<std::string> reference_ids;

  int64_t size() const { return static_cast<int64_t>(source_labels.size()); }
};

TrainingBatch materialize(const SampledPairs& pairs, const ImageStore& store);

TrainingBatch sample_batch(const ClassSet& classes, const ImageStore& store, int64_t batch_size,
                           std::mt19937_64& rng, SamplingMode mode = SamplingMode::kClassUniform,
                           bool include_target = true);

}  // namespace balagan

#endif  // BALAGAN_CLASS_SET_HPP
