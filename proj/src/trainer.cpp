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

#include "balagan/trainer.hpp"

#include "balagan/log.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "balagan/error.hpp"

namespace balagan {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr uint64_t kSamplerStream = 0x5a3f0c1e9b7d2468ULL;

AdamOptions adam_options(double lr, const TrainerOptions& o) {
  return AdamOptions{lr, o.beta1, o.beta2, 1e-8};
}

void set_requires_grad(torch::nn::Module& module, bool value) {
  for (auto& p : module.parameters()) p.requires_grad_(value);
}

void copy_module(torch::nn::Module& dst, const torch::nn::Module& src) {
  torch::NoGradGuard no_grad;
  auto s = src.named_parameters(true);
  for (auto& item : dst.named_parameters(true)) item.value().copy_(s[item.key()]);
}

void ema_update(torch::nn::Module& ema, const torch::nn::Module& live, double decay) {
  torch::NoGradGuard no_grad;
  auto s = live.named_parameters(true);
  for (auto& item : ema.named_parameters(true)) {
    item.value().mul_(decay).add_(s[item.key()], 1.0 - decay);
  }
}

std::string term_dump(const StepMetrics& m) {
  std::ostringstream out;
  out << "L_GAN_D=" << m.gan_d << " L_CE=" << m.ce << " R1=" << m.r1 << " L_GAN_G=" << m.gan_g
      << " L_R=" << m.rec << " L_FM=" << m.fm;
  return out.str();
}

void require_finite(const char* term, double value, const StepMetrics& m, int64_t step) {
  if (!std::isfinite(value)) {
    throw Error(ErrorKind::kNonFiniteLoss, std::string(term) + " is non-finite at step " +
                                               std::to_string(step) + " (" + term_dump(m) + ")");
  }
}

TensorArchive read_archive_checked(const fs::path& path) {
  auto archive = TensorArchive::load(path);
  if (archive.meta().value("kind", "") != "train-state") {
    throw Error(ErrorKind::kFormatError, path.string() + " is not a training checkpoint");
  }
  return archive;
}

}  // namespace

TrainState make_train_state(const ModelConfig& model, int64_t n_classes,
                            const TrainerOptions& options, uint64_t seed, std::string config_hash) {
  if (n_classes < 2) throw Error(ErrorKind::kConfigError, "training needs at least 2 classes");
  TrainState s;
  torch::manual_seed(seed);
  s.g = Generator(model);
  s.d = Discriminator(model, n_classes);
  s.opt_g = Adam(named_parameters_of(*s.g), adam_options(options.lr_g, options));
  s.opt_d = Adam(named_parameters_of(*s.d), adam_options(options.lr_d, options));
  if (options.ema) {
    s.g_ema = Generator(model);
    copy_module(*s.g_ema, *s.g);
    set_requires_grad(*s.g_ema, false);
  }
  s.ema_decay = options.ema_decay;
  s.rng.seed(seed ^ kSamplerStream);
  s.config_hash = std::move(config_hash);
  s.model = model;
  s.n_classes = n_classes;
  return s;
}

json StepMetrics::to_json() const {
  return json{{"step", step},   {"L_GAN_D", gan_d}, {"L_CE", ce},         {"R1", r1},
              {"L_GAN_G", gan_g}, {"L_R", rec},     {"L_FM", fm},         {"total_D", total_d},
              {"total_G", total_g}};
}

StepMetrics StepMetrics::from_json(const json& j) {
  StepMetrics m;
  try {
    m.step = j.at("step").get<int64_t>();
    m.gan_d = j.at("L_GAN_D").get<double>();
    m.ce = j.at("L_CE").get<double>();
    m.r1 = j.at("R1").get<double>();
    m.gan_g = j.at("L_GAN_G").get<double>();
    m.rec = j.at("L_R").get<double>();
    m.fm = j.at("L_FM").get<double>();
    m.total_d = j.at("total_D").get<double>();
    m.total_g = j.at("total_G").get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormatError, std::string("bad metric record: ") + e.what());
  }
  return m;
}

DiscriminatorTerms<torch::Tensor> discriminator_terms(
    DiscriminatorImpl& d, const torch::Tensor& x, const torch::Tensor& fake, const torch::Tensor& m_x,
    const torch::Tensor& m_y, bool use_dcls, R1Mode r1_mode,
    const std::function<void(const torch::Tensor&)>& on_r1_input) {
  auto real = x.detach().clone().requires_grad_(true);
  if (on_r1_input) on_r1_input(real);
  const auto real_map = d.trunk(real);
  const auto real_scores = d.adv_head(real_map);
  const auto real_true = select_scores(real_scores, m_x);
  const auto fake_scores = d.adv_head(d.trunk(fake.detach()));
  DiscriminatorTerms<torch::Tensor> dt;
  dt.gan = hinge_d_loss(real_true, select_scores(fake_scores, m_y));
  dt.ce = use_dcls ? classification_loss(d.cls_head(real_map), m_x) : torch::zeros({}, x.options());
  dt.r1 = r1_from_scores(r1_mode == R1Mode::kTrueClass ? real_true : real_scores.sum(1), real);
  return dt;
}

GeneratorTerms<torch::Tensor> generator_terms(GeneratorImpl& g, DiscriminatorImpl& d,
                                              const torch::Tensor& x, const torch::Tensor& y,
                                              const torch::Tensor& m_y) {
  // fake and self-reconstruction share one decoder pass
  const int64_t n = x.size(0);
  const auto content = g.encode_content(x);
  const auto styles = g.encode_style(torch::cat({y, x}));
  const auto out = g.decode(torch::cat({content, content}), styles);
  const auto fake = out.slice(0, 0, n);
  const auto rec = out.slice(0, n, 2 * n);
  const auto fake_map = d.trunk(fake);
  torch::Tensor ref_features;
  {
    torch::NoGradGuard no_grad;
    ref_features = d.pooled(d.trunk(y));
  }
  GeneratorTerms<torch::Tensor> gt;
  gt.gan = hinge_g_loss(select_scores(d.adv_head(fake_map), m_y));
  gt.rec = reconstruction_loss(x, rec);
  gt.fm = feature_matching_loss(d.pooled(fake_map), ref_features);
  return gt;
}

StepMetrics train_step(TrainState& state, const TrainingBatch& batch, const ClassSet& classes,
                       const LossWeights& weights, const Ablation& ablation, R1Mode r1_mode,
                       const StepHooks& hooks) {
  if (batch.size() == 0) throw Error(ErrorKind::kEmptyRequest, "empty training batch");
  if (classes.n_classes() != state.n_classes) {
    throw Error(ErrorKind::kConfigError, "class set size differs from the discriminator's");
  }
  if (!ablation.include_target) {
    for (size_t i = 0; i < batch.source_labels.size(); ++i) {
      if (classes.is_target(batch.source_labels[i]) || classes.is_target(batch.reference_labels[i])) {
        throw Error(ErrorKind::kConfigError,
                    "target-class image in a batch of a run without the target domain");
      }
    }
  }
  auto& g = *state.g;
  auto& d = *state.d;
  const auto x = batch.sources;
  const auto y = batch.references;
  const auto m_x = torch::tensor(batch.source_labels, torch::kInt64);
  const auto m_y = torch::tensor(batch.reference_labels, torch::kInt64);
  StepMetrics metrics;
  const int64_t step = state.step + 1;

  // discriminator
  state.opt_d.zero_grad();
  torch::Tensor fake;
  {
    torch::NoGradGuard no_grad;
    fake = g.forward(x, y);
  }
  const auto dt = discriminator_terms(d, x, fake, m_x, m_y, ablation.use_dcls, r1_mode, hooks.on_r1_input);
  const auto total_d = total_d_loss(dt, weights);
  metrics.gan_d = dt.gan.item<double>();
  metrics.ce = dt.ce.item<double>();
  metrics.r1 = dt.r1.item<double>();
  metrics.total_d = total_d.item<double>();
  require_finite("L_GAN_D", metrics.gan_d, metrics, step);
  require_finite("L_CE", metrics.ce, metrics, step);
  require_finite("R1", metrics.r1, metrics, step);
  total_d.backward();
  state.opt_d.step();
  state.opt_d.zero_grad();
  if (hooks.after_d_update) hooks.after_d_update();

  // generator
  set_requires_grad(d, false);
  state.opt_g.zero_grad();
  const auto gt = generator_terms(g, d, x, y, m_y);
  const auto total_g = total_g_loss(gt, weights);
  metrics.gan_g = gt.gan.item<double>();
  metrics.rec = gt.rec.item<double>();
  metrics.fm = gt.fm.item<double>();
  metrics.total_g = total_g.item<double>();
  try {
    require_finite("L_GAN_G", metrics.gan_g, metrics, step);
    require_finite("L_R", metrics.rec, metrics, step);
    require_finite("L_FM", metrics.fm, metrics, step);
  } catch (...) {
    set_requires_grad(d, true);
    throw;
  }
  total_g.backward();
  state.opt_g.step();
  state.opt_g.zero_grad();
  set_requires_grad(d, true);
  if (!state.g_ema.is_empty()) ema_update(*state.g_ema, g, state.ema_decay);

  state.step = step;
  metrics.step = step;
  return metrics;
}

TensorArchive checkpoint_archive(const TrainState& state) {
  TensorArchive a;
  std::ostringstream rng;
  rng << state.rng;
  auto& meta = a.meta();
  meta["kind"] = "train-state";
  meta["step"] = state.step;
  meta["rng"] = rng.str();
  meta["config_hash"] = state.config_hash;
  meta["model"] = state.model.to_json();
  meta["n_classes"] = state.n_classes;
  meta["ema"] = !state.g_ema.is_empty();
  meta["ema_decay"] = state.ema_decay;
  const auto& og = state.opt_g.options();
  const auto& od = state.opt_d.options();
  meta["adam"] = {{"lr_g", og.lr}, {"lr_d", od.lr}, {"beta1", og.beta1}, {"beta2", og.beta2}};
  store_module_state(*state.g, a, "g.");
  store_module_state(*state.d, a, "d.");
  a.add_all(state.opt_g.state(), "opt_g.");
  a.add_all(state.opt_d.state(), "opt_d.");
  if (!state.g_ema.is_empty()) store_module_state(*state.g_ema, a, "g_ema.");
  return a;
}

TrainState state_from_archive(const TensorArchive& a) {
  const auto& meta = a.meta();
  TrainerOptions o;
  try {
    o.lr_g = meta.at("adam").at("lr_g").get<double>();
    o.lr_d = meta.at("adam").at("lr_d").get<double>();
    o.beta1 = meta.at("adam").at("beta1").get<double>();
    o.beta2 = meta.at("adam").at("beta2").get<double>();
    o.ema = meta.at("ema").get<bool>();
    o.ema_decay = meta.at("ema_decay").get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormatError, std::string("checkpoint metadata: ") + e.what());
  }
  const auto model = ModelConfig::from_json(meta.at("model"));
  TrainState s = make_train_state(model, meta.at("n_classes").get<int64_t>(), o, 0,
                                  meta.at("config_hash").get<std::string>());
  load_module_state(*s.g, a, "g.");
  load_module_state(*s.d, a, "d.");
  s.opt_g.load_state(a.with_prefix("opt_g."));
  s.opt_d.load_state(a.with_prefix("opt_d."));
  if (o.ema) load_module_state(*s.g_ema, a, "g_ema.");
  s.step = meta.at("step").get<int64_t>();
  std::istringstream rng(meta.at("rng").get<std::string>());
  rng >> s.rng;
  if (rng.fail()) throw Error(ErrorKind::kFormatError, "checkpoint rng state is corrupt");
  return s;
}

void save_checkpoint(const TrainState& state, const fs::path& path) {
  checkpoint_archive(state).save(path);
}

TrainState load_checkpoint(const fs::path& path) {
  return state_from_archive(read_archive_checked(path));
}

Generator& eval_generator(TrainState& state) {
  return state.g_ema.is_empty() ? state.g : state.g_ema;
}

fs::path checkpoint_path(const fs::path& run_dir, int64_t step) {
  return run_dir / ("ckpt-" + std::to_string(step));
}

std::optional<fs::path> latest_checkpoint(const fs::path& run_dir) {
  std::optional<fs::path> best;
  int64_t best_step = -1;
  if (!fs::is_directory(run_dir)) return best;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const auto name = entry.path().filename().string();
    if (!name.starts_with("ckpt-")) continue;
    const auto digits = name.substr(5);
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) continue;
    const int64_t step = std::stoll(digits);
    if (step > best_step) {
      best_step = step;
      best = entry.path();
    }
  }
  return best;
}

std::vector<StepMetrics> read_metrics(const fs::path& path) {
  std::vector<StepMetrics> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(StepMetrics::from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kFormatError, path.string() + ": " + e.what());
    }
  }
  return out;
}

namespace {

// Keeps only the records with step <= `last_step`.
void truncate_log(const fs::path& path, int64_t last_step) {
  std::ifstream in(path);
  if (!in) return;
  std::string kept, line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (json::parse(line).at("step").get<int64_t>() <= last_step) kept += line + "\n";
  }
  in.close();
  std::ofstream(path, std::ios::trunc | std::ios::binary) << kept;
}

json audit_record(int64_t step, const TrainingBatch& batch, const ClassSet& classes) {
  int64_t target_hits = 0;
  for (size_t i = 0; i < batch.source_labels.size(); ++i) {
    target_hits += classes.is_target(batch.source_labels[i]);
    target_hits += classes.is_target(batch.reference_labels[i]);
  }
  return json{{"step", step},
              {"source_labels", batch.source_labels},
              {"reference_labels", batch.reference_labels},
              {"source_ids", batch.source_ids},
              {"reference_ids", batch.reference_ids},
              {"target_occurrences", target_hits}};
}

}  // namespace

TrainOutcome train(const RunConfig& config, const SplitManifest& manifest,
                   const ModalityAssignment& assignment, const ImageStore& store,
                   const fs::path& run_dir, const TrainRunOptions& options) {
  config.validate();
  const auto& m = config.modalities;
  const auto classes = build_class_set(
      assignment, m.mode, assignment.k_source,
      m.mode == ClassMode::kBalanced ? std::optional<int64_t>(assignment.k_target) : std::nullopt,
      &manifest);
  for (const auto& c : classes.classes) {
    for (const auto& id : c.members) {
      if (!store.contains(id)) {
        throw Error(ErrorKind::kUnknownId, "image store lacks assigned item " + id);
      }
    }
  }
  const std::string hash = config.hash();
  const auto& t = config.trainer;

  fs::create_directories(run_dir);
  const auto metrics_path = run_dir / "metrics.ndjson";
  const auto audit_path = run_dir / "batches.ndjson";
  const auto marker = run_dir / "INCOMPLETE";
  const auto latest = options.resume ? latest_checkpoint(run_dir) : std::nullopt;

  TrainState state;
  if (latest) {
    state = load_checkpoint(*latest);
    if (state.config_hash != hash) {
      throw Error(ErrorKind::kConfigError, "cannot resume " + run_dir.string() +
                                               ": checkpoint belongs to a different config");
    }
    truncate_log(metrics_path, state.step);
    truncate_log(audit_path, state.step);
    log::info("resuming ", run_dir.string(), " at step ", state.step);
  } else {
    state = make_train_state(config.model, classes.n_classes(), t, config.seed, hash);
    std::ofstream(run_dir / "config.json", std::ios::trunc) << config.to_json().dump(2) << "\n";
    std::ofstream(metrics_path, std::ios::trunc);
    if (t.audit_batches) std::ofstream(audit_path, std::ios::trunc);
    save_checkpoint(state, checkpoint_path(run_dir, 0));
  }
  std::ofstream(marker, std::ios::trunc) << "training in progress\n";

  std::ofstream metrics_log(metrics_path, std::ios::app | std::ios::binary);
  std::ofstream audit_log;
  if (t.audit_batches) audit_log.open(audit_path, std::ios::app | std::ios::binary);

  const int64_t last = options.stop_at ? std::min(*options.stop_at, t.steps) : t.steps;
  TrainOutcome outcome;
  outcome.run_dir = run_dir;
  outcome.final_checkpoint = checkpoint_path(run_dir, state.step);
  while (state.step < last) {
    const auto batch =
        sample_batch(classes, store, t.batch_size, state.rng, t.sampling, config.ablation.include_target);
    const auto metrics =
        train_step(state, batch, classes, config.losses, config.ablation, config.r1_mode);
    metrics_log << metrics.to_json().dump() << "\n";
    if (t.audit_batches) audit_log << audit_record(metrics.step, batch, classes).dump() << "\n";
    if (options.on_step) options.on_step(metrics);
    const bool periodic = t.checkpoint_every > 0 && state.step % t.checkpoint_every == 0;
    if (periodic || state.step == last) {
      metrics_log.flush();
      audit_log.flush();
      outcome.final_checkpoint = checkpoint_path(run_dir, state.step);
      save_checkpoint(state, outcome.final_checkpoint);
    }
  }
  metrics_log.close();
  audit_log.close();
  outcome.metrics = read_metrics(metrics_path);
  outcome.complete = state.step == t.steps;
  if (outcome.complete) fs::remove(marker);
  return outcome;
}

}  // namespace balagan
