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

// Acceptance criteria 1-11. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.
//
//   acceptance [criterion ...]
//
// BALAGAN_ACCEPTANCE_DIR keeps the artifacts of the end-to-end runs.

#include <torch/torch.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "balagan/adain.hpp"
#include "balagan/class_set.hpp"
#include "balagan/evaluation.hpp"
#include "balagan/feature_extractor.hpp"
#include "balagan/fid.hpp"
#include "balagan/log.hpp"
#include "balagan/losses.hpp"
#include "balagan/networks.hpp"
#include "balagan/nt_xent.hpp"
#include "balagan/pipeline.hpp"
#include "balagan/spherical_kmeans.hpp"
#include "balagan/synthetic.hpp"
#include "balagan/trainer.hpp"
#include "support.hpp"

using namespace balagan;
namespace bt = balagan::testing;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Report {
 public:
  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      failures_.push_back(what);
    }
  }
  void note(const std::string& what) { notes_.push_back(what); }
  Outcome outcome() const {
    std::ostringstream out;
    const auto& items = pass_ ? notes_ : failures_;
    for (size_t i = 0; i < items.size(); ++i) out << (i ? "; " : "") << items[i];
    if (!pass_ && !notes_.empty()) {
      out << " | ";
      for (size_t i = 0; i < notes_.size(); ++i) out << (i ? "; " : "") << notes_[i];
    }
    return {pass_, out.str()};
  }

 private:
  bool pass_ = true;
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream o;
  o << std::setprecision(precision) << v;
  return o.str();
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

torch::Tensor uniform(std::vector<int64_t> shape, double lo, double hi) {
  return torch::rand(shape, torch::kFloat64) * (hi - lo) + lo;
}

std::vector<int64_t> random_labels(int64_t n, int64_t classes, std::mt19937_64& rng) {
  std::uniform_int_distribution<int64_t> u(0, classes - 1);
  std::vector<int64_t> out(static_cast<size_t>(n));
  for (auto& v : out) v = u(rng);
  return out;
}

// ---- 1: loss oracles ---------------------------------------------------------

Outcome loss_oracles() {
  const auto t0 = Clock::now();
  Report r;
  torch::manual_seed(11);
  std::mt19937_64 rng(11);
  constexpr int kCases = 100;
  double worst = 0;
  auto track = [&](double got, double want, const char* name, int i) {
    const double e = std::abs(got - want);
    worst = std::max(worst, e);
    if (e > 1e-6) r.check(false, std::string(name) + " case " + std::to_string(i) + " off by " + fmt(e));
  };
  for (int i = 0; i < kCases; ++i) {
    const int64_t n = 1 + i % 7, c = 2 + i % 5;
    const auto real = uniform({n}, -3, 3), fake = uniform({n}, -3, 3);
    track(hinge_d_loss(real, fake).item<double>(), bt::oracle_hinge_d(bt::to_vector(real), bt::to_vector(fake)),
          "hinge_d", i);
    track(hinge_g_loss(fake).item<double>(), bt::oracle_hinge_g(bt::to_vector(fake)), "hinge_g", i);

    const auto a = uniform({n, 3, 4, 4}, -1, 1), b = uniform({n, 3, 4, 4}, -1, 1);
    track(reconstruction_loss(a, b).item<double>(), bt::oracle_mean_abs(bt::to_vector(a), bt::to_vector(b)),
          "reconstruction", i);
    const auto fa = uniform({n, 9}, -2, 2), fb = uniform({n, 9}, -2, 2);
    track(feature_matching_loss(fa, fb).item<double>(), bt::oracle_mean_abs(bt::to_vector(fa), bt::to_vector(fb)),
          "feature_matching", i);

    const auto logits = uniform({n, c}, -5, 5);
    const auto labels = random_labels(n, c, rng);
    const auto lt = torch::tensor(labels, torch::kInt64);
    track(classification_loss(logits, lt).item<double>(), bt::oracle_cross_entropy(bt::to_matrix(logits), labels),
          "cross_entropy", i);
    const auto sel = bt::to_vector(select_scores(logits, lt));
    const auto want = bt::oracle_select(bt::to_matrix(logits), labels);
    for (size_t j = 0; j < sel.size(); ++j) track(sel[j], want[j], "select", i);

    // R1 of a quadratic scorer s(x) = x^T A x + b^T x, gradient (A + A^T) x + b
    const int64_t d = 2 + i % 4;
    const auto A = uniform({d, d}, -1, 1), bv = uniform({d}, -1, 1);
    const auto x = uniform({n, d}, -1, 1);
    const auto r1 = r1_penalty(
        [&](const torch::Tensor& in) { return (in.matmul(A) * in).sum(1) + in.matmul(bv); }, x);
    double oracle = 0;
    const auto Am = bt::to_matrix(A);
    const auto bw = bt::to_vector(bv);
    const auto xm = bt::to_matrix(x);
    for (int64_t s = 0; s < n; ++s) {
      for (int64_t p = 0; p < d; ++p) {
        double g = bw[p];
        for (int64_t q = 0; q < d; ++q) g += (Am[p][q] + Am[q][p]) * xm[s][q];
        oracle += g * g;
      }
    }
    track(r1.item<double>(), oracle / n, "r1", i);

    LossWeights w{1.0 + i % 3, 10.0 / (1 + i % 4), 0.1 * (1 + i % 5), 1.0 / (1 + i % 2)};
    DiscriminatorTerms<double> dt{0.3 * i, 0.1 * i, 0.01 * i};
    GeneratorTerms<double> gt{-0.2 * i, 0.05 * i, 0.07 * i};
    track(total_d_loss(dt, w), dt.gan + w.lambda_ce * dt.ce + w.lambda_reg * dt.r1, "total_d", i);
    track(total_g_loss(gt, w), gt.gan + w.lambda_r * gt.rec + w.lambda_f * gt.fm, "total_g", i);
  }
  const double secs = seconds_since(t0);
  r.check(secs < 60, "runtime " + fmt(secs) + " s exceeds 60 s");
  r.note(std::to_string(kCases) + " cases x 9 ops, max |err| " + fmt(worst, 3) + ", " + fmt(secs, 3) + " s");
  return r.outcome();
}

// ---- 2: gradients ------------------------------------------------------------

ModelConfig toy_gd_config() {
  ModelConfig c;
  c.gen_channels = 1;
  c.gen_downsamples = 1;
  c.content_res_blocks = 0;
  c.decoder_res_blocks = 1;
  c.style_channels = 1;
  c.style_downsamples = 0;
  c.style_dim = 2;
  c.mlp_dim = 4;
  c.dis_channels = 1;
  c.dis_downsamples = 1;
  return c;
}

int64_t count_parameters(const torch::nn::Module& m) {
  int64_t n = 0;
  for (const auto& p : m.parameters()) n += p.numel();
  return n;
}

// Relative error between autograd and central differences over every
// parameter of `params`.
double gradient_error(const std::function<torch::Tensor()>& loss, const std::vector<torch::Tensor>& params,
                      double step) {
  std::vector<torch::Tensor> analytic;
  {
    const auto value = loss();
    auto grads = torch::autograd::grad({value}, params, {}, false, false, true);
    for (size_t i = 0; i < params.size(); ++i) {
      analytic.push_back(grads[i].defined() ? grads[i].flatten() : torch::zeros({params[i].numel()}, torch::kFloat64));
    }
  }
  std::vector<torch::Tensor> numeric;
  for (const auto& p : params) {
    auto flat = p.detach().view({-1});
    auto g = torch::zeros_like(flat);
    for (int64_t i = 0; i < flat.numel(); ++i) {
      const double orig = flat[i].item<double>();
      {
        torch::NoGradGuard ng;
        flat[i] = orig + step;
      }
      const double up = loss().item<double>();
      {
        torch::NoGradGuard ng;
        flat[i] = orig - step;
      }
      const double down = loss().item<double>();
      {
        torch::NoGradGuard ng;
        flat[i] = orig;
      }
      g[i] = (up - down) / (2 * step);
    }
    numeric.push_back(g);
  }
  return bt::relative_error(torch::cat(analytic), torch::cat(numeric));
}

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  Report r;
  torch::manual_seed(5);
  std::mt19937_64 rng(5);
  const auto cfg = toy_gd_config();
  const int64_t n_classes = 3, n = 2;
  Generator g(cfg);
  Discriminator d(cfg, n_classes);
  g->to(torch::kFloat64);
  d->to(torch::kFloat64);
  const int64_t params = count_parameters(*g) + count_parameters(*d);
  const auto x = uniform({n, 3, 8, 8}, -1, 1);
  const auto y = uniform({n, 3, 8, 8}, -1, 1);
  const auto m_x = torch::tensor(random_labels(n, n_classes, rng), torch::kInt64);
  const auto m_y = torch::tensor(random_labels(n, n_classes, rng), torch::kInt64);
  torch::Tensor fake;
  {
    torch::NoGradGuard ng;
    fake = g->forward(x, y);
  }
  const auto gp = g->parameters();
  const auto dp = d->parameters();
  const double step = 1e-6;
  std::vector<std::pair<std::string, std::function<torch::Tensor()>>> terms_d = {
      {"L_GAN(D)", [&] { return discriminator_terms(*d, x, fake, m_x, m_y).gan; }},
      {"L_CE(D)", [&] { return discriminator_terms(*d, x, fake, m_x, m_y).ce; }},
      {"R1(D)", [&] { return discriminator_terms(*d, x, fake, m_x, m_y).r1; }},
  };
  std::vector<std::pair<std::string, std::function<torch::Tensor()>>> terms_g = {
      {"L_GAN(G)", [&] { return generator_terms(*g, *d, x, y, m_y).gan; }},
      {"L_R(G)", [&] { return generator_terms(*g, *d, x, y, m_y).rec; }},
      {"L_FM(G)", [&] { return generator_terms(*g, *d, x, y, m_y).fm; }},
  };
  std::ostringstream errs;
  auto run = [&](const auto& terms, const std::vector<torch::Tensor>& ps) {
    for (const auto& [name, f] : terms) {
      const double e = gradient_error(f, ps, step);
      errs << name << "=" << fmt(e, 2) << " ";
      r.check(e <= 1e-3, name + " relative error " + fmt(e));
    }
  };
  run(terms_d, dp);
  for (auto& p : dp) p.requires_grad_(false);
  run(terms_g, gp);
  for (auto& p : dp) p.requires_grad_(true);
  const double secs = seconds_since(t0);
  r.check(secs < 300, "runtime " + fmt(secs) + " s exceeds 300 s");
  r.note(std::to_string(params) + " parameters (G " + std::to_string(count_parameters(*g)) + ", D " +
         std::to_string(count_parameters(*d)) + "), 8x8, " + errs.str() + fmt(secs, 3) + " s");
  return r.outcome();
}

// ---- 3: AdaIN ----------------------------------------------------------------

Outcome adain_invariants() {
  Report r;
  torch::manual_seed(3);
  double stat_err = 0, identity_err = 0, oracle_err = 0;
  for (int i = 0; i < 100; ++i) {
    const int64_t n = 1 + i % 3, c = 1 + i % 6, h = 4 + i % 5;
    const auto content = torch::randn({n, c, h, h}, torch::kFloat64) * (1.0 + i % 4) + 0.5 * (i % 3);
    const auto mean = uniform({n, c}, -2, 2);
    const auto std = uniform({n, c}, 0.1, 3);
    const auto out = adain(content, mean, std);
    const auto out_mean = out.mean({2, 3});
    const auto out_std = (out - out_mean.unsqueeze(2).unsqueeze(3)).pow(2).mean({2, 3}).sqrt();
    stat_err = std::max({stat_err, (out_mean - mean).abs().max().item<double>(),
                         (out_std - std).abs().max().item<double>()});
    const auto want = bt::oracle_adain(content, mean, std, kAdainEps);
    const auto got = bt::to_vector(out);
    for (size_t j = 0; j < got.size(); ++j) oracle_err = std::max(oracle_err, std::abs(got[j] - want[j]));

    // identity: restyle with the content's own statistics (content std >= 1)
    const auto base = torch::randn({n, c, h, h}, torch::kFloat64);
    const auto mu = base.mean({2, 3}, true);
    const auto centered = (base - mu) / (base - mu).pow(2).mean({2, 3}, true).sqrt() * (1.0 + i % 3);
    const auto cont = centered + mu;
    const auto cmu = cont.mean({2, 3});
    const auto csd = (cont - cmu.unsqueeze(2).unsqueeze(3)).pow(2).mean({2, 3}).sqrt();
    const auto same = adain(cont, cmu, csd);
    const auto dev = (same - cont).abs() / (cont - cmu.unsqueeze(2).unsqueeze(3)).abs().clamp_min(1e-12);
    identity_err = std::max(identity_err, dev.max().item<double>());
  }
  r.check(stat_err <= 1e-4, "channel statistics off by " + fmt(stat_err));
  r.check(identity_err <= 1e-5, "identity deviation " + fmt(identity_err));
  r.check(oracle_err <= 1e-6, "oracle deviation " + fmt(oracle_err));
  r.note("stats err " + fmt(stat_err, 2) + ", identity rel dev " + fmt(identity_err, 2) + ", oracle err " +
         fmt(oracle_err, 2));
  return r.outcome();
}

// ---- 4: NT-Xent --------------------------------------------------------------

Outcome nt_xent_cases() {
  Report r;
  torch::manual_seed(4);
  double uniform_err = 0;
  for (int64_t n : {2, 3, 4, 8, 16, 32}) {
    const auto row = torch::randn({1, 16}, torch::kFloat64);
    for (double tau : {0.1, 0.5, 1.0}) {
      const double got = nt_xent_loss(row.repeat({2 * n, 1}), tau).item<double>();
      uniform_err = std::max(uniform_err, std::abs(got - std::log(2.0 * n - 1)));
    }
  }
  r.check(uniform_err <= 1e-6, "uniform-softmax case off by " + fmt(uniform_err));
  bool exact = true;
  double general = 0;
  for (int i = 0; i < 50; ++i) {
    const auto z = torch::randn({8, 12}, torch::kFloat64);
    const auto base = nt_xent_loss(z, 0.5);
    // power-of-two row scales leave the normalized rows bit-identical
    const auto pow2 = torch::pow(2.0, torch::randint(-8, 9, {8, 1}, torch::kInt64).to(torch::kFloat64));
    exact = exact && torch::equal(nt_xent_loss(z * pow2, 0.5), base);
    const auto scale = uniform({8, 1}, 0.01, 100);
    general = std::max(general, std::abs(nt_xent_loss(z * scale, 0.5).item<double>() - base.item<double>()));
  }
  r.check(exact, "power-of-two rescaling changed the loss");
  r.check(general <= 1e-12, "arbitrary rescaling changed the loss by " + fmt(general));
  r.note("ln(2n-1) err " + fmt(uniform_err, 2) + ", pow2 scaling bit-exact, general scaling " + fmt(general, 2));
  return r.outcome();
}

// ---- 5: spherical k-means ----------------------------------------------------

Outcome kmeans_checks() {
  const auto t0 = Clock::now();
  Report r;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd(0, 1);
  int monotone = 0;
  for (int run = 0; run < 50; ++run) {
    const int n = 40 + run, dim = 2 + run % 6, k = 2 + run % 5;
    Eigen::MatrixXd pts(n, dim);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < dim; ++j) pts(i, j) = nd(rng);
    const auto model = spherical_kmeans(pts, k, static_cast<uint64_t>(run));
    bool ok = true;
    for (size_t i = 1; i < model.objective_history.size(); ++i) {
      ok = ok && model.objective_history[i] >= model.objective_history[i - 1] - 1e-12;
    }
    monotone += ok;
  }
  r.check(monotone == 50, std::to_string(50 - monotone) + " of 50 runs decreased the objective");

  int optimal = 0;
  constexpr int kCases = 20;
  for (int t = 0; t < kCases; ++t) {
    // three points near e1 and three near e2, each within 20 degrees of its axis
    std::uniform_real_distribution<double> jitter(-0.35, 0.35), length(0.5, 2.0);
    Eigen::MatrixXd pts(6, 2);
    for (int i = 0; i < 6; ++i) {
      const double angle = (i < 3 ? 0.0 : M_PI / 2) + jitter(rng);
      const double len = length(rng);
      pts(i, 0) = len * std::cos(angle);
      pts(i, 1) = len * std::sin(angle);
    }
    const auto unit = normalize_rows(pts);
    bt::Matrix m(6, std::vector<double>(2));
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 2; ++j) m[i][j] = unit(i, j);
    const double best = bt::oracle_best_spherical_objective(m, 2);
    const auto model = spherical_kmeans(pts, 2, static_cast<uint64_t>(t));
    const auto& as = model.assignments;
    const bool axis = as[0] == as[1] && as[1] == as[2] && as[3] == as[4] && as[4] == as[5] && as[0] != as[3];
    optimal += axis && std::abs(model.objective - best) <= 1e-9;
  }
  r.check(optimal == kCases, std::to_string(kCases - optimal) + " of " + std::to_string(kCases) +
                                 " 6-point cases missed the axis clusters / 2^6 optimum");
  const double secs = seconds_since(t0);
  r.check(secs < 60, "runtime " + fmt(secs) + " s");
  r.note("50/50 monotone, " + std::to_string(optimal) + "/" + std::to_string(kCases) + " exhaustive optima, " +
         fmt(secs, 3) + " s");
  return r.outcome();
}

// ---- 6: FID ------------------------------------------------------------------

Eigen::MatrixXd random_spd(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = n(rng);
  return m * m.transpose() / d + 0.1 * Eigen::MatrixXd::Identity(d, d);
}

ActivationStats gaussian(Eigen::VectorXd mu, Eigen::MatrixXd sigma) {
  ActivationStats s;
  s.mu = std::move(mu);
  s.sigma = std::move(sigma);
  s.n = 2;
  return s;
}

Outcome fid_checks() {
  Report r;
  std::mt19937_64 rng(6);
  std::normal_distribution<double> nd(0, 1);
  double identity = 0, symmetry = 0, roundtrip = 0;
  for (int t = 0; t < 50; ++t) {
    const int d = 1 + t % 16;
    Eigen::VectorXd ma(d), mb(d);
    for (int i = 0; i < d; ++i) {
      ma(i) = nd(rng);
      mb(i) = nd(rng);
    }
    const auto a = gaussian(ma, random_spd(d, rng));
    const auto b = gaussian(mb, random_spd(d, rng));
    identity = std::max(identity, std::abs(fid(a, a)));
    symmetry = std::max(symmetry, std::abs(fid(a, b) - fid(b, a)));
    const auto s = sqrtm_product(a.sigma, b.sigma);
    const Eigen::MatrixXd p = a.sigma * b.sigma;
    roundtrip = std::max(roundtrip, (s * s - p).norm() / p.norm());
  }
  auto one = [](double mu, double var) {
    return gaussian(Eigen::VectorXd::Constant(1, mu), Eigen::MatrixXd::Constant(1, 1, var));
  };
  const double closed = std::max(std::abs(fid(one(0, 1), one(1, 1)) - 1.0), std::abs(fid(one(0, 4), one(0, 1)) - 1.0));
  r.check(identity <= 1e-6, "identity " + fmt(identity));
  r.check(symmetry <= 1e-8, "symmetry " + fmt(symmetry));
  r.check(closed <= 1e-6, "1-D closed form off by " + fmt(closed));
  r.check(roundtrip <= 1e-6, "matrix sqrt round trip " + fmt(roundtrip));
  r.note("identity " + fmt(identity, 2) + ", symmetry " + fmt(symmetry, 2) + ", 1-D " + fmt(closed, 2) +
         ", sqrt round trip " + fmt(roundtrip, 2));
  return r.outcome();
}

// ---- 7: pair coverage --------------------------------------------------------

Outcome pair_coverage() {
  Report r;
  ModalityAssignment a;
  a.k_source = 3;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 10 * (c + 1); ++i) a.entries.emplace_back("a" + std::to_string(c) + "-" + std::to_string(i), c);
  for (int i = 0; i < 3; ++i) a.entries.emplace_back("b" + std::to_string(i), 3);
  const auto classes = build_class_set(a, ClassMode::kImbalanced);
  std::mt19937_64 rng(7);
  const auto pairs = sample_pairs(classes, 10000, rng);
  std::map<std::pair<int64_t, int64_t>, int> counts;
  for (size_t i = 0; i < 10000; ++i) counts[{pairs.source_labels[i], pairs.reference_labels[i]}]++;
  double worst = 0;
  for (const auto& [pair, n] : counts) worst = std::max(worst, std::abs(n / 10000.0 - 1.0 / 16));
  r.check(classes.n_classes() == 4, "class count " + std::to_string(classes.n_classes()));
  r.check(counts.size() == 16, std::to_string(counts.size()) + " of 16 ordered pairs seen");
  r.check(worst <= 0.01, "max frequency deviation " + fmt(worst));
  r.note("16/16 pairs, max |freq - 1/16| = " + fmt(worst, 3));
  return r.outcome();
}

// ---- shared end-to-end runs --------------------------------------------------

// Small translator for the desk-scale runs (about 0.25 s per step on one core).
const char* kAcceptanceConfig = R"({
  "data": {"height": 32, "width": 32},
  "modalities": {
    "allow_invalid_k": true,
    "augment": {"stages": [{"kind": "crop", "probability": 1.0, "min_scale": 0.5},
                           {"kind": "flip", "probability": 0.5}]},
    "contrastive": {"steps": 100}
  },
  "model": {"gen_channels": 16, "style_channels": 16, "dis_channels": 16, "mlp_dim": 64,
            "style_dim": 32, "dis_downsamples": 2, "style_downsamples": 2},
  "losses": {"lambda_r": 10.0},
  "trainer": {"steps": 2000, "batch_size": 8, "checkpoint_every": 1000}
})";

RunConfig acceptance_config(const std::string& name, uint64_t seed, int64_t k) {
  auto c = RunConfig::from_json(nlohmann::json::parse(kAcceptanceConfig));
  c.name = name;
  c.seed = seed;
  c.modalities.k = k;
  return c;
}

struct DataSet {
  SyntheticDataset files;
  SplitManifest manifest{{}, {}, 0};
  ImageStore store;
};

DataSet make_data(const fs::path& root, int styles, int per_style, int n_target, uint64_t seed) {
  DataSet d;
  d.files = write_synthetic_dataset(root, styles, per_style, n_target, Resolution{32, 32}, seed);
  d.manifest = SplitManifest(d.files.source_files, d.files.target_files, seed);
  d.store = ImageStore::load(d.manifest, Resolution{32, 32});
  return d;
}

struct EndToEnd {
  fs::path run_dir;
  double purity = 0;
  double rec_initial = 0, rec_final = 0;
  double fid_initial = 0, fid_final = 0;
  double train_seconds = 0, total_seconds = 0;
};

double fixed_set_reconstruction(TrainState& state, const torch::Tensor& x) {
  auto& g = eval_generator(state);
  g->eval();
  torch::NoGradGuard ng;
  double total = 0;
  for (int64_t s = 0; s < x.size(0); s += 16) {
    const auto xb = x.slice(0, s, std::min(x.size(0), s + 16));
    total += (g->forward(xb, xb) - xb).abs().sum().item<double>();
  }
  return total / static_cast<double>(x.numel());
}

EndToEnd overfit_run(const fs::path& root, const std::string& name) {
  const auto t0 = Clock::now();
  EndToEnd out;
  const auto data = make_data(root / "data", 2, 32, 16, 8);
  const auto cfg = acceptance_config(name, 8, 2);
  auto encoder = train_encoder(cfg, data.manifest, data.store);
  const auto found = discover(cfg, data.manifest, data.store, encoder, 2);
  std::vector<int64_t> predicted;
  for (const auto& id : data.files.source_files) predicted.push_back(*found.assignment.class_of(id));
  out.purity = cluster_purity(predicted, data.files.source_styles);
  out.run_dir = root / name;
  fs::remove_all(out.run_dir);
  const auto t1 = Clock::now();
  const auto outcome = train(cfg, data.manifest, found.assignment, data.store, out.run_dir);
  out.train_seconds = seconds_since(t1);

  const auto x = data.store.gather_ids(data.manifest.source_items());
  FrozenConvExtractor extractor(cfg.evaluation.extractor_seed);
  auto initial = load_checkpoint(checkpoint_path(out.run_dir, 0));
  auto final = load_checkpoint(outcome.final_checkpoint);
  out.rec_initial = fixed_set_reconstruction(initial, x);
  out.rec_final = fixed_set_reconstruction(final, x);
  out.fid_initial = evaluate_translation(eval_generator(initial), data.manifest, data.store, cfg.evaluation, extractor).fid;
  out.fid_final = evaluate_translation(eval_generator(final), data.manifest, data.store, cfg.evaluation, extractor).fid;
  out.total_seconds = seconds_since(t0);
  return out;
}

class Workspace {
 public:
  Workspace() {
    if (const char* dir = std::getenv("BALAGAN_ACCEPTANCE_DIR")) {
      root_ = dir;
      fs::create_directories(root_);
    } else {
      temp_ = std::make_unique<bt::TempDir>("balagan-acceptance");
      root_ = temp_->path();
    }
  }
  const fs::path& root() const { return root_; }
  const EndToEnd& first_run() {
    if (!first_) first_ = overfit_run(root_, "overfit-a");
    return *first_;
  }

 private:
  std::unique_ptr<bt::TempDir> temp_;
  fs::path root_;
  std::optional<EndToEnd> first_;
};

// ---- 8: tiny overfit ---------------------------------------------------------

Outcome tiny_overfit(Workspace& ws) {
  Report r;
  const auto& e = ws.first_run();
  const double rec_drop = e.rec_initial / e.rec_final;
  const double fid_drop = e.fid_initial / e.fid_final;
  r.check(rec_drop >= 10, "reconstruction drop " + fmt(rec_drop) + "x < 10x");
  r.check(fid_drop >= 2, "FID drop " + fmt(fid_drop) + "x < 2x");
  r.check(e.total_seconds < 1800, "runtime " + fmt(e.total_seconds) + " s exceeds 30 min");
  r.note("L_R " + fmt(e.rec_initial) + " -> " + fmt(e.rec_final) + " (" + fmt(rec_drop, 3) + "x), FID " +
         fmt(e.fid_initial) + " -> " + fmt(e.fid_final) + " (" + fmt(fid_drop, 3) + "x), purity " +
         fmt(e.purity, 3) + ", 2000 steps in " + fmt(e.train_seconds, 4) + " s");
  return r.outcome();
}

// ---- 9: k trend --------------------------------------------------------------

Outcome k_trend(Workspace& ws) {
  const auto t0 = Clock::now();
  Report r;
  const auto data = make_data(ws.root() / "data4", 4, 32, 32, 9);
  int wins = 0;
  std::ostringstream rows;
  for (uint64_t seed : {1, 2, 3}) {
    auto cfg = acceptance_config("trend-s" + std::to_string(seed), seed, 1);
    const std::vector<int64_t> ks{1, 4};
    const auto sweep = k_sweep(cfg, ks, data.manifest, data.store, ws.root() / ("trend-" + std::to_string(seed)));
    if (!sweep[0].fid || !sweep[1].fid) {
      r.check(false, "seed " + std::to_string(seed) + " failed: " + sweep[0].error + sweep[1].error);
      continue;
    }
    const bool win = *sweep[1].fid <= *sweep[0].fid;
    wins += win;
    rows << "seed " << seed << ": k=1 " << fmt(*sweep[0].fid) << " k=4 " << fmt(*sweep[1].fid) << "; ";
  }
  const double secs = seconds_since(t0);
  r.check(wins >= 2, "FID(k=4) <= FID(k=1) in only " + std::to_string(wins) + " of 3 seeds");
  r.check(secs < 7200, "runtime " + fmt(secs) + " s exceeds 2 h");
  r.note(rows.str() + std::to_string(wins) + "/3, " + fmt(secs, 4) + " s");
  return r.outcome();
}

// ---- 10: ablations -----------------------------------------------------------

Outcome ablation_contract(Workspace& ws) {
  Report r;
  const auto data = make_data(ws.root() / "data-ablation", 2, 8, 4, 10);
  ModalityAssignment a;
  a.k_source = 2;
  for (size_t i = 0; i < data.files.source_files.size(); ++i)
    a.entries.emplace_back(data.files.source_files[i], data.files.source_styles[i]);
  for (const auto& id : data.files.target_files) a.entries.emplace_back(id, 2);
  auto cfg = acceptance_config("ablation-b", 10, 2);
  cfg.trainer.steps = 50;
  cfg.trainer.checkpoint_every = 50;

  cfg.ablation.use_dcls = false;
  const auto b = train(cfg, data.manifest, a, data.store, ws.root() / "ablation-b");
  bool ce_zero = b.metrics.size() == 50;
  for (const auto& m : b.metrics) ce_zero = ce_zero && m.ce == 0.0;
  auto cls_params = [](const fs::path& ckpt) {
    auto s = load_checkpoint(ckpt);
    std::vector<torch::Tensor> out;
    for (const auto& item : s.d->named_parameters())
      if (item.key().starts_with("cls.")) out.push_back(item.value().detach().clone());
    return out;
  };
  const auto before = cls_params(checkpoint_path(b.run_dir, 0));
  const auto after = cls_params(b.final_checkpoint);
  bool untouched = !before.empty() && before.size() == after.size();
  for (size_t i = 0; untouched && i < before.size(); ++i) untouched = torch::equal(before[i], after[i]);
  r.check(ce_zero, "variant B logged a non-zero L_CE");
  r.check(untouched, "variant B changed d_cls parameters");

  cfg.name = "ablation-c";
  cfg.ablation.use_dcls = true;
  cfg.ablation.include_target = false;
  train(cfg, data.manifest, a, data.store, ws.root() / "ablation-c");
  std::ifstream audit(ws.root() / "ablation-c" / "batches.ndjson");
  std::string line;
  int64_t records = 0, target_hits = 0;
  const std::set<std::string> target(data.files.target_files.begin(), data.files.target_files.end());
  while (std::getline(audit, line)) {
    const auto j = nlohmann::json::parse(line);
    ++records;
    target_hits += j.at("target_occurrences").get<int64_t>();
    for (const auto& key : {"source_ids", "reference_ids"})
      for (const auto& id : j.at(key)) target_hits += target.count(id.get<std::string>());
  }
  r.check(records == 50, "variant C audit has " + std::to_string(records) + " records");
  r.check(target_hits == 0, "variant C audit shows " + std::to_string(target_hits) + " target occurrences");
  r.note("B: L_CE = 0 on 50/50 steps, " + std::to_string(before.size()) + " d_cls tensors unchanged; C: " +
         std::to_string(records) + " batches, 0 target occurrences");
  return r.outcome();
}

// ---- 11: determinism ---------------------------------------------------------

Outcome determinism(Workspace& ws) {
  Report r;
  const auto& a = ws.first_run();
  const auto b = overfit_run(ws.root(), "overfit-b");
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string{std::istreambuf_iterator<char>(in), {}};
  };
  const auto la = slurp(a.run_dir / "metrics.ndjson");
  const auto lb = slurp(b.run_dir / "metrics.ndjson");
  r.check(!la.empty() && la == lb, "metric logs differ");
  r.check(slurp(a.run_dir / "batches.ndjson") == slurp(b.run_dir / "batches.ndjson"), "batch audits differ");
  r.note("two seeded runs, identical " + std::to_string(read_metrics(a.run_dir / "metrics.ndjson").size()) +
         "-step metric logs");
  return r.outcome();
}

}  // namespace

int main(int argc, char** argv) {
  torch::set_num_threads(1);
  log::set_level(log::Level::kWarn);
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  Workspace ws;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"loss-oracle suite", loss_oracles},
      {"gradient suite", gradient_suite},
      {"AdaIN invariants", adain_invariants},
      {"NT-Xent analytic cases", nt_xent_cases},
      {"spherical k-means", kmeans_checks},
      {"FID", fid_checks},
      {"pair coverage", pair_coverage},
      {"tiny-overfit end-to-end", [&] { return tiny_overfit(ws); }},
      {"k-trend at desk scale", [&] { return k_trend(ws); }},
      {"ablation contract", [&] { return ablation_contract(ws); }},
      {"determinism", [&] { return determinism(ws); }},
  };
  int failed = 0, ran = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    ++ran;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << "criterion " << id << " " << criteria[i].first << ": "
              << o.detail << " (" << fmt(seconds_since(t0), 4) << " s)" << std::endl;
  }
  std::cout << "acceptance: " << ran - failed << "/" << ran << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
