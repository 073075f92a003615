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

#include "balagan/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "balagan/error.hpp"
#include "balagan/hash.hpp"

namespace balagan {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& message) {
  throw Error(ErrorKind::kConfigError, message);
}

// Reads known keys from one object and rejects the rest on finish().
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) config_error("'" + name_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      config_error(where(key) + " has the wrong type");
    }
  }

  const json* raw(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string where(const std::string& key) const { return name_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) config_error("unknown key '" + where(key) + "'");
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

template <typename Parse>
auto parse_enum(Section& s, const char* key, Parse parse, decltype(parse("")) fallback) {
  std::string text;
  if (!s.raw(key)) return fallback;
  s.get(key, text);
  try {
    return parse(text);
  } catch (const Error& e) {
    config_error(s.where(key) + ": " + e.what());
  }
}

const json& sub(const json& j, const char* key) {
  static const json empty = json::object();
  auto it = j.find(key);
  return it == j.end() ? empty : *it;
}

}  // namespace

json RunConfig::to_json() const {
  json j;
  j["version"] = kVersion;
  j["name"] = name;
  j["seed"] = seed;
  j["data"] = {{"source_dir", data.source_dir},
               {"target_dir", data.target_dir},
               {"manifest", data.manifest},
               {"n_source", data.n_source},
               {"n_target", data.n_target},
               {"height", data.resolution.height},
               {"width", data.resolution.width}};
  const auto& m = modalities;
  j["modalities"] = {
      {"k", m.k ? json(*m.k) : json("auto")},
      {"allow_invalid_k", m.allow_invalid_k},
      {"mode", std::string(to_string(m.mode))},
      {"k_target", m.k_target},
      {"assignment", m.assignment},
      {"encoder",
       {{"base_channels", m.encoder.base_channels},
        {"embedding_dim", m.encoder.embedding_dim},
        {"projection_dim", m.encoder.projection_dim}}},
      {"contrastive",
       {{"temperature", m.contrastive.temperature},
        {"batch_size", m.contrastive.batch_size},
        {"steps", m.contrastive.steps},
        {"learning_rate", m.contrastive.learning_rate},
        {"monitor_size", m.contrastive.monitor_size}}},
      {"augment", m.augment.to_json()},
      {"use_projection", m.use_projection},
      {"max_iter", m.max_iter},
      {"tol", m.tol}};
  j["model"] = model.to_json();
  j["losses"] = {{"lambda_ce", losses.lambda_ce},
                 {"lambda_reg", losses.lambda_reg},
                 {"lambda_r", losses.lambda_r},
                 {"lambda_f", losses.lambda_f},
                 {"r1_mode", std::string(to_string(r1_mode))}};
  const auto& t = trainer;
  j["trainer"] = {{"steps", t.steps},
                  {"batch_size", t.batch_size},
                  {"lr_g", t.lr_g},
                  {"lr_d", t.lr_d},
                  {"beta1", t.beta1},
                  {"beta2", t.beta2},
                  {"checkpoint_every", t.checkpoint_every},
                  {"sampling", std::string(to_string(t.sampling))},
                  {"ema", t.ema},
                  {"ema_decay", t.ema_decay},
                  {"audit_batches", t.audit_batches}};
  j["ablation"] = {{"use_dcls", ablation.use_dcls},
                   {"include_target", ablation.include_target}};
  j["evaluation"] = {{"pairing_seed", evaluation.pairing_seed},
                     {"n_fake", evaluation.n_fake},
                     {"extractor", evaluation.extractor},
                     {"extractor_path", evaluation.extractor_path},
                     {"extractor_seed", evaluation.extractor_seed},
                     {"batch_size", evaluation.batch_size}};
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  Section top(j, "config");
  int version = kVersion;
  top.get("version", version);
  if (version != kVersion) config_error("unsupported config version " + std::to_string(version));
  top.get("name", c.name);
  top.get("seed", c.seed);

  if (top.raw("data")) {
    Section s(sub(j, "data"), "data");
    s.get("source_dir", c.data.source_dir);
    s.get("target_dir", c.data.target_dir);
    s.get("manifest", c.data.manifest);
    s.get("n_source", c.data.n_source);
    s.get("n_target", c.data.n_target);
    s.get("height", c.data.resolution.height);
    s.get("width", c.data.resolution.width);
    s.finish();
  }

  if (top.raw("modalities")) {
    const json& mj = sub(j, "modalities");
    Section s(mj, "modalities");
    auto& m = c.modalities;
    if (const json* k = s.raw("k")) {
      if (k->is_null() || (k->is_string() && k->get<std::string>() == "auto")) {
        m.k.reset();
      } else if (k->is_number_integer()) {
        m.k = k->get<int64_t>();
      } else {
        config_error("modalities.k must be an integer or \"auto\"");
      }
    }
    s.get("allow_invalid_k", m.allow_invalid_k);
    m.mode = parse_enum(s, "mode", parse_class_mode, m.mode);
    s.get("k_target", m.k_target);
    s.get("assignment", m.assignment);
    if (s.raw("encoder")) {
      Section e(sub(mj, "encoder"), "modalities.encoder");
      e.get("base_channels", m.encoder.base_channels);
      e.get("embedding_dim", m.encoder.embedding_dim);
      e.get("projection_dim", m.encoder.projection_dim);
      e.finish();
    }
    if (s.raw("contrastive")) {
      Section e(sub(mj, "contrastive"), "modalities.contrastive");
      e.get("temperature", m.contrastive.temperature);
      e.get("batch_size", m.contrastive.batch_size);
      e.get("steps", m.contrastive.steps);
      e.get("learning_rate", m.contrastive.learning_rate);
      e.get("monitor_size", m.contrastive.monitor_size);
      e.finish();
    }
    if (const json* a = s.raw("augment")) m.augment = AugmentationConfig::from_json(*a);
    s.get("use_projection", m.use_projection);
    s.get("max_iter", m.max_iter);
    s.get("tol", m.tol);
    s.finish();
  }

  if (const json* mj = top.raw("model")) c.model = ModelConfig::from_json(*mj);

  if (top.raw("losses")) {
    Section s(sub(j, "losses"), "losses");
    s.get("lambda_ce", c.losses.lambda_ce);
    s.get("lambda_reg", c.losses.lambda_reg);
    s.get("lambda_r", c.losses.lambda_r);
    s.get("lambda_f", c.losses.lambda_f);
    c.r1_mode = parse_enum(s, "r1_mode", parse_r1_mode, c.r1_mode);
    s.finish();
  }

  if (top.raw("trainer")) {
    Section s(sub(j, "trainer"), "trainer");
    auto& t = c.trainer;
    s.get("steps", t.steps);
    s.get("batch_size", t.batch_size);
    s.get("lr_g", t.lr_g);
    s.get("lr_d", t.lr_d);
    s.get("beta1", t.beta1);
    s.get("beta2", t.beta2);
    s.get("checkpoint_every", t.checkpoint_every);
    t.sampling = parse_enum(s, "sampling", parse_sampling_mode, t.sampling);
    s.get("ema", t.ema);
    s.get("ema_decay", t.ema_decay);
    s.get("audit_batches", t.audit_batches);
    s.finish();
  }

  if (top.raw("ablation")) {
    Section s(sub(j, "ablation"), "ablation");
    s.get("use_dcls", c.ablation.use_dcls);
    s.get("include_target", c.ablation.include_target);
    s.finish();
  }

  if (top.raw("evaluation")) {
    Section s(sub(j, "evaluation"), "evaluation");
    auto& e = c.evaluation;
    s.get("pairing_seed", e.pairing_seed);
    s.get("n_fake", e.n_fake);
    s.get("extractor", e.extractor);
    s.get("extractor_path", e.extractor_path);
    s.get("extractor_seed", e.extractor_seed);
    s.get("batch_size", e.batch_size);
    s.finish();
  }
  top.finish();
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIoError, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    config_error("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

std::string RunConfig::hash() const { return sha256_hex(to_json().dump()); }

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) config_error(what);
  };
  require(!name.empty() && name.find_first_of("/\\") == std::string::npos,
          "name must be a non-empty plain file name");
  require(data.n_source >= 0 && data.n_target >= 0, "data counts must be non-negative");
  require(data.resolution.height >= 8 && data.resolution.width >= 8,
          "data resolution must be at least 8x8");
  const int64_t scale = int64_t{1} << std::max(model.gen_downsamples, model.dis_downsamples);
  require(data.resolution.height % scale == 0 && data.resolution.width % scale == 0,
          "data resolution must be divisible by 2^downsamples");
  require(!modalities.k || *modalities.k >= 1, "modalities.k must be >= 1");
  require(modalities.k_target >= 1, "modalities.k_target must be >= 1");
  require(modalities.contrastive.temperature > 0, "modalities.contrastive.temperature must be > 0");
  require(modalities.contrastive.batch_size >= 2, "modalities.contrastive.batch_size must be >= 2");
  require(modalities.contrastive.steps >= 0, "modalities.contrastive.steps must be >= 0");
  require(modalities.contrastive.learning_rate > 0, "modalities.contrastive.learning_rate must be > 0");
  require(modalities.max_iter >= 1, "modalities.max_iter must be >= 1");
  require(modalities.encoder.base_channels >= 1 && modalities.encoder.embedding_dim >= 1 &&
              modalities.encoder.projection_dim >= 1,
          "modalities.encoder widths must be >= 1");
  try {
    losses.validate();
  } catch (const Error& e) {
    config_error(std::string("losses: ") + e.what());
  }
  require(trainer.steps >= 0, "trainer.steps must be >= 0");
  require(trainer.batch_size >= 1, "trainer.batch_size must be >= 1");
  require(trainer.lr_g > 0 && trainer.lr_d > 0, "trainer learning rates must be > 0");
  require(trainer.beta1 >= 0 && trainer.beta1 < 1 && trainer.beta2 >= 0 && trainer.beta2 < 1,
          "trainer betas must lie in [0, 1)");
  require(trainer.checkpoint_every >= 0, "trainer.checkpoint_every must be >= 0");
  require(trainer.ema_decay > 0 && trainer.ema_decay < 1, "trainer.ema_decay must lie in (0, 1)");
  require(evaluation.n_fake >= 0, "evaluation.n_fake must be >= 0");
  require(evaluation.batch_size >= 1, "evaluation.batch_size must be >= 1");
  require(evaluation.extractor == "frozen-conv" || evaluation.extractor == "torchscript",
          "evaluation.extractor must be frozen-conv or torchscript");
  require(evaluation.extractor != "torchscript" || !evaluation.extractor_path.empty(),
          "evaluation.extractor_path is required for torchscript");
}

RunConfig apply_override(const RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    config_error("override '" + assignment + "' must look like section.key=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json j = config.to_json();
  json* node = &j;
  std::stringstream parts(path);
  std::string part;
  std::vector<std::string> keys;
  while (std::getline(parts, part, '.')) keys.push_back(part);
  for (size_t i = 0; i + 1 < keys.size(); ++i) {
    if (!node->is_object() || !node->contains(keys[i])) {
      config_error("unknown config section '" + keys[i] + "' in override");
    }
    node = &(*node)[keys[i]];
  }
  if (!node->is_object() || !node->contains(keys.back())) {
    config_error("unknown config key '" + path + "' in override");
  }
  (*node)[keys.back()] = value;
  return RunConfig::from_json(j);
}

}  // namespace balagan
