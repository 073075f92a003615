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

// balagan: command-line entry point for the whole pipeline.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <torch/torch.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "balagan/error.hpp"
#include "balagan/evaluation.hpp"
#include "balagan/feature_extractor.hpp"
#include "balagan/image_io.hpp"
#include "balagan/log.hpp"
#include "balagan/modalities.hpp"
#include "balagan/pipeline.hpp"
#include "balagan/run_config.hpp"
#include "balagan/split_manifest.hpp"
#include "balagan/style_encoder.hpp"
#include "balagan/synthetic.hpp"
#include "balagan/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace balagan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Globals {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::vector<std::string> overrides;
  std::string name;
  bool dry_run = false;
  bool verbose = false;
  bool quiet = false;
  int threads = 1;
};

// config file < BALAGAN_SEED < flags
RunConfig resolve_config(const Globals& g, const fs::path& fallback_config = {}) {
  RunConfig c;
  if (!g.config_path.empty()) {
    c = RunConfig::load(g.config_path);
  } else if (!fallback_config.empty() && fs::exists(fallback_config)) {
    c = RunConfig::load(fallback_config);
  }
  if (const char* env = std::getenv("BALAGAN_SEED"); env && *env) {
    try {
      c.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kConfigError, std::string("BALAGAN_SEED is not an integer: ") + env);
    }
  }
  if (g.seed) c.seed = *g.seed;
  if (!g.name.empty()) c.name = g.name;
  for (const auto& o : g.overrides) c = apply_override(c, o);
  c.validate();
  return c;
}

void print_plan(const std::string& command, const json& plan) {
  json out{{"command", command}, {"dry_run", true}, {"plan", plan}};
  std::cout << out.dump(2) << std::endl;
}

void require_file(const fs::path& path, const char* what) {
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorKind::kIoError, std::string(what) + " " + path.string() + " does not exist");
  }
}

fs::path manifest_path_for(const RunConfig& c, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (!c.data.manifest.empty()) return c.data.manifest;
  return fs::path("splits") / (c.name + ".manifest");
}

fs::path assignment_path_for(const RunConfig& c, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (!c.modalities.assignment.empty()) return c.modalities.assignment;
  return fs::path("modalities") / (c.name + ".assign");
}

// Newest checkpoint of --run, or --checkpoint as given.
fs::path checkpoint_for(const std::string& run, const std::string& checkpoint) {
  if (!checkpoint.empty()) return checkpoint;
  auto latest = latest_checkpoint(run);
  if (!latest) throw Error(ErrorKind::kIoError, "no checkpoint in " + run);
  return *latest;
}

std::vector<int64_t> parse_k_list(const std::string& text) {
  std::vector<int64_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stoll(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kConfigError, "k list entry '" + item + "' is not an integer");
    }
  }
  return out;
}

// --- make-splits ---------------------------------------------------------

struct SplitArgs {
  std::string source, target, out;
  int64_t n_source = 0, n_target = 0;
};

int cmd_make_splits(const Globals& g, const SplitArgs& a) {
  auto c = resolve_config(g);
  c.data.source_dir = a.source;
  c.data.target_dir = a.target;
  if (a.n_source > 0) c.data.n_source = a.n_source;
  if (a.n_target > 0) c.data.n_target = a.n_target;
  c.data.manifest.clear();
  const fs::path out = a.out.empty() ? fs::path("splits") / (c.name + ".manifest") : fs::path(a.out);
  if (g.dry_run) {
    print_plan("make-splits", {{"source_dir", a.source}, {"target_dir", a.target},
                               {"n_source", c.data.n_source}, {"n_target", c.data.n_target},
                               {"seed", c.seed}, {"output", out.string()}});
    return kExitOk;
  }
  const auto manifest = resolve_manifest(c);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  manifest.write(out);
  log::info("wrote ", out.string(), " (", manifest.source_count(), " source, ",
            manifest.target_count(), " target)");
  return kExitOk;
}

// --- discover ------------------------------------------------------------

struct DiscoverArgs {
  std::string manifest, out, k = "config", mode;
};

int cmd_discover(const Globals& g, const DiscoverArgs& a) {
  auto c = resolve_config(g);
  if (a.k == "auto") {
    c.modalities.k.reset();
  } else if (a.k != "config") {
    c = apply_override(c, "modalities.k=" + a.k);
  }
  if (!a.mode.empty()) c = apply_override(c, "modalities.mode=" + a.mode);
  const auto manifest_path = manifest_path_for(c, a.manifest);
  const fs::path out = a.out.empty() ? fs::path("modalities") / (c.name + ".assign") : fs::path(a.out);
  fs::path encoder_path = out;
  encoder_path.replace_extension(".encoder");
  require_file(manifest_path, "manifest");
  const auto manifest = SplitManifest::read(manifest_path);
  const int64_t k = resolve_k(c, manifest);
  if (g.dry_run) {
    print_plan("discover", {{"manifest", manifest_path.string()}, {"k", k},
                            {"k_target", c.modalities.k_target},
                            {"mode", std::string(to_string(c.modalities.mode))},
                            {"encoder_steps", c.modalities.contrastive.steps},
                            {"output", out.string()}, {"encoder_output", encoder_path.string()}});
    return kExitOk;
  }
  const auto store = ImageStore::load(manifest, c.data.resolution);
  auto encoder = train_encoder(c, manifest, store);
  log::info("style encoder monitor loss ", encoder.initial_monitor_loss, " -> ",
            encoder.final_monitor_loss);
  const auto found = discover(c, manifest, store, encoder, k);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_style_encoder(encoder.encoder, encoder_path);
  found.assignment.write(out);
  std::ostringstream hist;
  for (const auto n : found.assignment.histogram()) hist << " " << n;
  log::info("wrote ", out.string(), " with k=", k, "; class sizes:", hist.str());
  return kExitOk;
}

// --- train ---------------------------------------------------------------

struct TrainArgs {
  std::string manifest, assignment, run_root = "runs", ablation = "none";
  std::optional<int64_t> steps;
  bool resume = false;
};

int cmd_train(const Globals& g, const TrainArgs& a) {
  auto c = resolve_config(g);
  if (a.steps) c.trainer.steps = *a.steps;
  if (a.ablation == "no-dcls") {
    c.ablation.use_dcls = false;
  } else if (a.ablation == "funit") {
    c.ablation.include_target = false;
  } else if (a.ablation != "none") {
    throw Error(ErrorKind::kConfigError, "unknown ablation '" + a.ablation + "'");
  }
  const auto manifest_path = manifest_path_for(c, a.manifest);
  const auto assignment_path = assignment_path_for(c, a.assignment);
  c.data.manifest = manifest_path.string();
  c.modalities.assignment = assignment_path.string();
  c.validate();
  require_file(manifest_path, "manifest");
  require_file(assignment_path, "assignment");
  const auto manifest = SplitManifest::read(manifest_path);
  const auto assignment = ModalityAssignment::read(assignment_path);
  const auto classes = build_class_set(assignment, c.modalities.mode, {}, {}, &manifest);
  const fs::path run_dir = fs::path(a.run_root) / c.name;
  if (g.dry_run) {
    std::vector<std::string> names;
    for (const auto& cls : classes.classes) names.push_back(cls.name);
    print_plan("train", {{"run_dir", run_dir.string()}, {"config_hash", c.hash()},
                         {"classes", names}, {"trainable_pairs", classes.trainable_pairs()},
                         {"steps", c.trainer.steps}, {"resume", a.resume},
                         {"config", c.to_json()}});
    return kExitOk;
  }
  const auto store = ImageStore::load(manifest, c.data.resolution);
  TrainRunOptions options;
  options.resume = a.resume;
  const int64_t every = std::max<int64_t>(1, c.trainer.steps / 20);
  options.on_step = [every](const StepMetrics& m) {
    if (m.step % every == 0) {
      log::info("step ", m.step, " D=", m.total_d, " G=", m.total_g, " L_R=", m.rec);
    }
  };
  const auto outcome = train(c, manifest, assignment, store, run_dir, options);
  log::info("final checkpoint ", outcome.final_checkpoint.string());
  return kExitOk;
}

// --- translate -----------------------------------------------------------

struct TranslateArgs {
  std::string run, checkpoint, manifest, out;
  std::optional<uint64_t> pairing_seed;
  int64_t limit = 0;
};

int cmd_translate(const Globals& g, const TranslateArgs& a) {
  auto c = resolve_config(g, a.run.empty() ? fs::path() : fs::path(a.run) / "config.json");
  if (a.pairing_seed) c.evaluation.pairing_seed = *a.pairing_seed;
  const auto ckpt = checkpoint_for(a.run, a.checkpoint);
  const auto manifest_path = manifest_path_for(c, a.manifest);
  const fs::path out = a.out.empty() ? fs::path(a.run.empty() ? "translations" : a.run) / "translations"
                                     : fs::path(a.out);
  require_file(ckpt, "checkpoint");
  require_file(manifest_path, "manifest");
  const auto manifest = SplitManifest::read(manifest_path);
  std::vector<std::string> sources = manifest.source_items();
  if (a.limit > 0 && a.limit < static_cast<int64_t>(sources.size())) sources.resize(a.limit);
  if (g.dry_run) {
    print_plan("translate", {{"checkpoint", ckpt.string()}, {"manifest", manifest_path.string()},
                             {"n_sources", sources.size()},
                             {"n_references", manifest.target_count()},
                             {"pairing_seed", c.evaluation.pairing_seed}, {"output", out.string()}});
    return kExitOk;
  }
  const auto store = ImageStore::load(manifest, c.data.resolution);
  auto state = load_checkpoint(ckpt);
  const auto t = translate_dataset(eval_generator(state), store, sources, manifest.target_items(),
                                   c.evaluation.pairing_seed, c.evaluation.batch_size);
  write_translation(t, out);
  log::info("wrote ", t.pairing.pairs.size(), " translations to ", out.string());
  return kExitOk;
}

// --- evaluate ------------------------------------------------------------

struct EvaluateArgs {
  std::string run, checkpoint, manifest, out;
  bool real_vs_real = false;
};

int cmd_evaluate(const Globals& g, const EvaluateArgs& a) {
  auto c = resolve_config(g, a.run.empty() ? fs::path() : fs::path(a.run) / "config.json");
  const auto manifest_path = manifest_path_for(c, a.manifest);
  require_file(manifest_path, "manifest");
  fs::path ckpt;
  if (!a.real_vs_real) {
    ckpt = checkpoint_for(a.run, a.checkpoint);
    require_file(ckpt, "checkpoint");
  }
  const fs::path out = !a.out.empty() ? fs::path(a.out)
                       : !a.run.empty() ? fs::path(a.run) / "fid.json"
                                        : fs::path("fid.json");
  if (g.dry_run) {
    print_plan("evaluate", {{"checkpoint", ckpt.string()}, {"manifest", manifest_path.string()},
                            {"real_vs_real", a.real_vs_real},
                            {"extractor", c.evaluation.extractor}, {"output", out.string()}});
    return kExitOk;
  }
  const auto manifest = SplitManifest::read(manifest_path);
  const auto store = ImageStore::load(manifest, c.data.resolution);
  auto extractor = make_extractor(c.evaluation.extractor, c.evaluation.extractor_seed,
                                  c.evaluation.extractor_path);
  FidReport report;
  if (a.real_vs_real) {
    const auto real = store.gather_ids(manifest.target_items());
    report = fid_report(*extractor, real, real, c.evaluation.batch_size);
  } else {
    auto state = load_checkpoint(ckpt);
    report = evaluate_translation(eval_generator(state), manifest, store, c.evaluation, *extractor);
  }
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream(out, std::ios::trunc) << report.to_json().dump(2) << "\n";
  std::cout << report.to_json().dump() << std::endl;
  return kExitOk;
}

// --- sweep-k -------------------------------------------------------------

struct SweepArgs {
  std::string manifest, k_values = "1,2,4", out;
};

int cmd_sweep_k(const Globals& g, const SweepArgs& a) {
  auto c = resolve_config(g);
  const auto ks = parse_k_list(a.k_values);
  const auto manifest_path = manifest_path_for(c, a.manifest);
  c.data.manifest = manifest_path.string();
  require_file(manifest_path, "manifest");
  const auto manifest = SplitManifest::read(manifest_path);
  const fs::path out = a.out.empty() ? fs::path("runs") / (c.name + "-sweep") : fs::path(a.out);
  if (g.dry_run) {
    std::set<int64_t> seen;
    for (const auto k : ks) {
      if (!seen.insert(k).second) {
        throw Error(ErrorKind::kDuplicateK, "k=" + std::to_string(k) + " appears twice in the sweep");
      }
      choose_k(manifest.source_count(), manifest.target_count(), k, c.modalities.allow_invalid_k);
    }
    print_plan("sweep-k", {{"k_values", ks}, {"manifest", manifest_path.string()},
                           {"steps_per_k", c.trainer.steps}, {"output", out.string()}});
    return kExitOk;
  }
  const auto store = ImageStore::load(manifest, c.data.resolution);
  SweepOptions options;
  options.on_row = [](const SweepRow& r) {
    if (r.fid) log::info("k=", r.k, " FID=", *r.fid);
  };
  const auto rows = k_sweep(c, ks, manifest, store, out, options);
  std::cout << sweep_table(rows);
  for (const auto& r : rows) {
    if (!r.fid) return kExitRuntime;
  }
  return kExitOk;
}

// --- grid ----------------------------------------------------------------

struct GridArgs {
  std::string run, checkpoint, manifest, out;
  int64_t sources = 4, references = 4;
};

int cmd_grid(const Globals& g, const GridArgs& a) {
  auto c = resolve_config(g, a.run.empty() ? fs::path() : fs::path(a.run) / "config.json");
  const auto ckpt = checkpoint_for(a.run, a.checkpoint);
  const auto manifest_path = manifest_path_for(c, a.manifest);
  require_file(ckpt, "checkpoint");
  require_file(manifest_path, "manifest");
  const fs::path out = a.out.empty() ? fs::path(a.run.empty() ? "." : a.run) / "grid.png" : fs::path(a.out);
  if (g.dry_run) {
    print_plan("grid", {{"checkpoint", ckpt.string()}, {"sources", a.sources},
                        {"references", a.references}, {"output", out.string()}});
    return kExitOk;
  }
  const auto manifest = SplitManifest::read(manifest_path);
  const auto store = ImageStore::load(manifest, c.data.resolution);
  auto take = [](const std::vector<std::string>& ids, int64_t n) {
    return std::vector<std::string>(ids.begin(), ids.begin() + std::min<int64_t>(n, ids.size()));
  };
  const auto src = take(manifest.source_items(), a.sources);
  const auto ref = take(manifest.target_items(), a.references);
  auto state = load_checkpoint(ckpt);
  const auto grid = diversity_grid(eval_generator(state), store.gather_ids(src), store.gather_ids(ref));
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_image(out, grid.composite);
  log::info("wrote ", out.string());
  return kExitOk;
}

// --- synth ---------------------------------------------------------------

struct SynthArgs {
  std::string out;
  int styles = 2, per_style = 32, n_target = 16;
  int64_t size = 32;
};

int cmd_synth(const Globals& g, const SynthArgs& a) {
  const auto c = resolve_config(g);
  if (g.dry_run) {
    print_plan("synth", {{"output", a.out}, {"styles", a.styles}, {"per_style", a.per_style},
                         {"n_target", a.n_target}, {"size", a.size}, {"seed", c.seed}});
    return kExitOk;
  }
  const auto ds = write_synthetic_dataset(a.out, a.styles, a.per_style, a.n_target,
                                          Resolution{a.size, a.size}, c.seed);
  log::info("wrote ", ds.source_files.size(), " source and ", ds.target_files.size(),
            " target images under ", a.out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"balagan: imbalanced image-to-image translation through latent modalities"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "JSON run config")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "global seed (overrides BALAGAN_SEED and the config)");
  app.add_option("--name", g.name, "run name used in artifact paths");
  app.add_option("--set", g.overrides, "config override section.key=value (repeatable)");
  app.add_flag("--dry-run", g.dry_run, "validate and print the plan without side effects");
  app.add_flag("-v,--verbose", g.verbose, "debug logging");
  app.add_flag("-q,--quiet", g.quiet, "errors only");
  app.add_option("--threads", g.threads, "intra-op threads")->check(CLI::PositiveNumber);

  SplitArgs split;
  auto* s = app.add_subcommand("make-splits", "sample an imbalanced source/target manifest");
  s->add_option("--source", split.source, "source-domain image directory")->required();
  s->add_option("--target", split.target, "target-domain image directory")->required();
  s->add_option("--n-source", split.n_source, "source items (0 = all)");
  s->add_option("--n-target", split.n_target, "target items (0 = all)");
  s->add_option("--out", split.out, "manifest path (default splits/<name>.manifest)");

  DiscoverArgs disc;
  auto* d = app.add_subcommand("discover", "train the style encoder and cluster modalities");
  d->add_option("--manifest", disc.manifest, "split manifest");
  d->add_option("--k", disc.k, "number of source modalities, or auto");
  d->add_option("--mode", disc.mode, "imbalanced or balanced");
  d->add_option("--out", disc.out, "assignment path (default modalities/<name>.assign)");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "cross-modal adversarial training");
  t->add_option("--manifest", tr.manifest, "split manifest");
  t->add_option("--assignment", tr.assignment, "modality assignment");
  t->add_option("--steps", tr.steps, "training steps");
  t->add_option("--ablation", tr.ablation, "none, no-dcls or funit")
      ->check(CLI::IsMember({"none", "no-dcls", "funit"}));
  t->add_option("--run-root", tr.run_root, "parent of run directories");
  t->add_flag("--resume", tr.resume, "continue from the newest checkpoint");

  TranslateArgs tl;
  auto* l = app.add_subcommand("translate", "translate the source pool with target references");
  l->add_option("--run", tl.run, "run directory");
  l->add_option("--checkpoint", tl.checkpoint, "explicit checkpoint");
  l->add_option("--manifest", tl.manifest, "split manifest");
  l->add_option("--out", tl.out, "output directory");
  l->add_option("--pairing-seed", tl.pairing_seed, "reference pairing seed");
  l->add_option("--limit", tl.limit, "translate only the first N sources");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "FID of translated source vs real target");
  e->add_option("--run", ev.run, "run directory");
  e->add_option("--checkpoint", ev.checkpoint, "explicit checkpoint");
  e->add_option("--manifest", ev.manifest, "split manifest");
  e->add_option("--out", ev.out, "report path");
  e->add_flag("--real-vs-real", ev.real_vs_real, "score the real target set against itself");

  SweepArgs sw;
  auto* k = app.add_subcommand("sweep-k", "train and score one model per k");
  k->add_option("--manifest", sw.manifest, "split manifest");
  k->add_option("--k-values", sw.k_values, "comma separated k list");
  k->add_option("--out", sw.out, "sweep directory");

  GridArgs gr;
  auto* r = app.add_subcommand("grid", "diversity grid of sources x references");
  r->add_option("--run", gr.run, "run directory");
  r->add_option("--checkpoint", gr.checkpoint, "explicit checkpoint");
  r->add_option("--manifest", gr.manifest, "split manifest");
  r->add_option("--sources", gr.sources, "rows")->check(CLI::PositiveNumber);
  r->add_option("--references", gr.references, "columns")->check(CLI::PositiveNumber);
  r->add_option("--out", gr.out, "image path");

  SynthArgs sy;
  auto* y = app.add_subcommand("synth", "write the procedural colored-shapes dataset");
  y->add_option("--out", sy.out, "dataset root")->required();
  y->add_option("--styles", sy.styles, "source styles (1-8)");
  y->add_option("--per-style", sy.per_style, "images per source style");
  y->add_option("--n-target", sy.n_target, "target images");
  y->add_option("--size", sy.size, "image side in pixels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return kExitUsage;
  }

  log::set_level(g.quiet ? log::Level::kError : g.verbose ? log::Level::kDebug : log::Level::kInfo);
  torch::set_num_threads(g.threads);
  try {
    if (*s) return cmd_make_splits(g, split);
    if (*d) return cmd_discover(g, disc);
    if (*t) return cmd_train(g, tr);
    if (*l) return cmd_translate(g, tl);
    if (*e) return cmd_evaluate(g, ev);
    if (*k) return cmd_sweep_k(g, sw);
    if (*r) return cmd_grid(g, gr);
    if (*y) return cmd_synth(g, sy);
  } catch (const Error& ex) {
    log::error(ex.what());
    return ex.kind() == ErrorKind::kConfigError ? kExitUsage : kExitRuntime;
  } catch (const std::exception& ex) {
    log::error(ex.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
