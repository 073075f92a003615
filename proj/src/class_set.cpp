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

#include "balagan/class_set.hpp"

#include "balagan/error.hpp"

namespace balagan {

ClassSet build_class_set(const ModalityAssignment& assignment, ClassMode mode,
                         std::optional<int64_t> k_source, std::optional<int64_t> k_target,
                         const SplitManifest* manifest) {
  auto inconsistent = [](const std::string& what) {
    return Error(ErrorKind::kInconsistentAssignment, what);
  };
  if (assignment.mode != mode) {
    throw inconsistent("assignment was built for the " + std::string(to_string(assignment.mode)) +
                       " setting, requested " + std::string(to_string(mode)));
  }
  if (mode == ClassMode::kImbalanced && assignment.k_target != 1) {
    throw inconsistent("imbalanced setting has exactly one target class");
  }
  if (k_source && *k_source != assignment.k_source) {
    throw inconsistent("k_s=" + std::to_string(*k_source) + " but assignment has k=" +
                       std::to_string(assignment.k_source));
  }
  if (k_target && *k_target != assignment.k_target) {
    throw inconsistent("k_t=" + std::to_string(*k_target) + " but assignment has k_target=" +
                       std::to_string(assignment.k_target));
  }

  ClassSet set;
  set.mode = mode;
  for (int64_t c = 0; c < assignment.n_classes(); ++c) {
    ClassDescriptor d;
    d.index = c;
    if (c < assignment.k_source) {
      d.domain = Domain::kSource;
      d.name = "A" + std::to_string(c + 1);
    } else {
      d.domain = Domain::kTarget;
      d.name = mode == ClassMode::kImbalanced ? "B" : "B" + std::to_string(c - assignment.k_source + 1);
    }
    set.classes.push_back(std::move(d));
  }
  for (const auto& [id, cls] : assignment.entries) {
    if (cls < 0 || cls >= assignment.n_classes()) {
      throw inconsistent("'" + id + "' has class " + std::to_string(cls) + " outside [0, " +
                         std::to_string(assignment.n_classes()) + ")");
    }
    auto& d = set.classes[static_cast<size_t>(cls)];
    if (manifest != nullptr) {
      const auto domain = manifest->domain_of(id);
      if (!domain) throw inconsistent("'" + id + "' is not in the manifest");
      if (*domain != d.domain) {
        throw inconsistent("'" + id + "' belongs to domain " + std::string(1, domain_tag(*domain)) +
                           " but was assigned class " + d.name);
      }
    }
    d.members.push_back(id);
  }
  return set;
}

std::string_view to_string(SamplingMode mode) {
  return mode == SamplingMode::kClassUniform ? "class_uniform" : "image_uniform";
}

SamplingMode parse_sampling_mode(std::string_view text) {
  if (text == "class_uniform") return SamplingMode::kClassUniform;
  if (text == "image_uniform") return SamplingMode::kImageUniform;
  throw Error(ErrorKind::kConfigError, "sampling must be class_uniform or image_uniform");
}

SampledPairs sample_pairs(const ClassSet& classes, int64_t batch_size, std::mt19937_64& rng,
                          SamplingMode mode, bool include_target) {
  if (batch_size < 1) throw Error(ErrorKind::kConfigError, "batch_size must be >= 1");
  std::vector<int64_t> eligible;
  int64_t eligible_images = 0;
  for (const auto& c : classes.classes) {
    if (!include_target && c.domain == Domain::kTarget) continue;
    if (c.members.empty()) throw Error(ErrorKind::kEmptyClass, "class " + c.name + " has no images");
    eligible.push_back(c.index);
    eligible_images += static_cast<int64_t>(c.members.size());
  }
  if (eligible.empty()) throw Error(ErrorKind::kEmptyClass, "no class is eligible for sampling");

  auto draw = [&](int64_t& label, std::string& id) {
    if (mode == SamplingMode::kClassUniform) {
      label = eligible[std::uniform_int_distribution<size_t>(0, eligible.size() - 1)(rng)];
      const auto& members = classes.classes[static_cast<size_t>(label)].members;
      id = members[std::uniform_int_distribution<size_t>(0, members.size() - 1)(rng)];
      return;
    }
    auto pick = std::uniform_int_distribution<int64_t>(0, eligible_images - 1)(rng);
    for (auto cls : eligible) {
      const auto& members = classes.classes[static_cast<size_t>(cls)].members;
      if (pick < static_cast<int64_t>(members.size())) {
        label = cls;
        id = members[static_cast<size_t>(pick)];
        return;
      }
      pick -= static_cast<int64_t>(members.size());
    }
  };

  SampledPairs out;
  out.source_labels.resize(static_cast<size_t>(batch_size));
  out.reference_labels.resize(static_cast<size_t>(batch_size));
  out.source_ids.resize(static_cast<size_t>(batch_size));
  out.reference_ids.resize(static_cast<size_t>(batch_size));
  for (size_t i = 0; i < static_cast<size_t>(batch_size); ++i) {
    draw(out.source_labels[i], out.source_ids[i]);
    draw(out.reference_labels[i], out.reference_ids[i]);
  }
  return out;
}

TrainingBatch materialize(const SampledPairs& pairs, const ImageStore& store) {
  TrainingBatch batch;
  batch.sources = store.gather_ids(pairs.source_ids);
  batch.references = store.gather_ids(pairs.reference_ids);
  batch.source_labels = pairs.source_labels;
  batch.reference_labels = pairs.reference_labels;
  batch.source_ids = pairs.source_ids;
  batch.reference_ids = pairs.reference_ids;
  return batch;
}

TrainingBatch sample_batch(const ClassSet& classes, const ImageStore& store, int64_t batch_size,
                           std::mt19937_64& rng, SamplingMode mode, bool include_target) {
  return materialize(sample_pairs(classes, batch_size, rng, mode, include_target), store);
}

}  // namespace balagan
