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

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <fstream>
#include <random>
#include <set>

#include "balagan/evaluation.hpp"
#include "balagan/feature_extractor.hpp"
#include "balagan/fid.hpp"
#include "expect_error.hpp"
#include "support.hpp"

using namespace balagan;
namespace bt = balagan::testing;
namespace fs = std::filesystem;

namespace {

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
  s.n = 100;
  return s;
}

// tr((A B)^{1/2}) from the eigenvalues of the non-symmetric product
double oracle_trace_sqrt(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(a * b);
  double t = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) t += std::sqrt(std::max(0.0, es.eigenvalues()[i].real()));
  return t;
}

double oracle_fid(const ActivationStats& a, const ActivationStats& b) {
  return (a.mu - b.mu).squaredNorm() + a.sigma.trace() + b.sigma.trace() - 2 * oracle_trace_sqrt(a.sigma, b.sigma);
}

// Extracts the first pixel of channel 0 as a single feature.
class PixelExtractor : public FeatureExtractor {
 public:
  std::string id() const override { return "pixel"; }
  torch::Tensor extract(const torch::Tensor& images) override {
    return images.index({torch::indexing::Slice(), 0, 0, 0}).unsqueeze(1).to(torch::kFloat64);
  }
};

ModelConfig tiny_model() {
  ModelConfig c;
  c.gen_channels = 4;
  c.gen_downsamples = 1;
  c.content_res_blocks = 1;
  c.decoder_res_blocks = 1;
  c.style_channels = 4;
  c.style_downsamples = 1;
  c.style_dim = 4;
  c.mlp_dim = 8;
  c.dis_channels = 4;
  c.dis_downsamples = 1;
  return c;
}

}  // namespace

// ---- statistics ------------------------------------------------------------

TEST(ActivationStats, TwoPointUnbiased) {
  Eigen::MatrixXd f(2, 1);
  f << 0.0, 2.0;
  const auto s = stats_from_features(f);
  EXPECT_DOUBLE_EQ(s.mu(0), 1.0);
  EXPECT_DOUBLE_EQ(s.sigma(0, 0), 2.0);
  EXPECT_EQ(s.n, 2);
  StatsAccumulator acc(1);
  acc.add(f);
  EXPECT_DOUBLE_EQ(acc.finalize().sigma(0, 0), 2.0);
}

TEST(ActivationStats, IdenticalImagesGiveZeroCovariance) {
  FrozenConvExtractor ex;
  const auto img = torch::rand({1, 3, 16, 16}) * 2 - 1;
  const auto s = compute_activation_stats(img.repeat({5, 1, 1, 1}), ex, 2);
  EXPECT_LT(s.sigma.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(s.dim(), ex.dim());
}

TEST(ActivationStats, StreamMatchesInMemory) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(3.0, 2.0);
  Eigen::MatrixXd f(97, 6);
  for (int i = 0; i < f.rows(); ++i)
    for (int j = 0; j < f.cols(); ++j) f(i, j) = n(rng);
  const auto ref = stats_from_features(f);
  StatsAccumulator acc(6);
  for (int start = 0; start < 97; start += 10) acc.add(f.middleRows(start, std::min(10, 97 - start)));
  const auto s = acc.finalize();
  EXPECT_LT((s.mu - ref.mu).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((s.sigma - ref.sigma).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((s.sigma - s.sigma.transpose()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(ActivationStats, ShardMergeIsOrderFree) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  Eigen::MatrixXd f(30, 3);
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 3; ++j) f(i, j) = u(rng);
  StatsAccumulator a(3), b(3), c(3);
  a.add(f.topRows(7));
  b.add(f.middleRows(7, 13));
  c.add(f.bottomRows(10));
  StatsAccumulator ab = a, cb = c;
  ab.merge(b);
  ab.merge(c);
  cb.merge(a);
  cb.merge(b);
  const auto ref = stats_from_features(f);
  EXPECT_LT((ab.finalize().sigma - ref.sigma).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((cb.finalize().sigma - ref.sigma).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ActivationStats, ImageStreamMatchesTensor) {
  FrozenConvExtractor ex(5);
  const auto imgs = torch::rand({9, 3, 16, 16}) * 2 - 1;
  const auto whole = compute_activation_stats(imgs, ex, 9);
  const auto streamed = compute_activation_stats(stream_tensor(imgs, 4), ex);
  EXPECT_LT((whole.mu - streamed.mu).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((whole.sigma - streamed.sigma).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ActivationStats, TooFewSamples) {
  StatsAccumulator acc(2);
  EXPECT_ERROR_KIND(acc.finalize(), ErrorKind::kTooFewSamples);
  acc.add(Eigen::MatrixXd::Ones(1, 2));
  EXPECT_ERROR_KIND(acc.finalize(), ErrorKind::kTooFewSamples);
  FrozenConvExtractor ex;
  EXPECT_ERROR_KIND(compute_activation_stats(torch::zeros({1, 3, 8, 8}), ex), ErrorKind::kTooFewSamples);
}

// ---- FID -------------------------------------------------------------------

TEST(Fid, OneDimensionalClosedForms) {
  auto s = [](double mu, double var) {
    return gaussian(Eigen::VectorXd::Constant(1, mu), Eigen::MatrixXd::Constant(1, 1, var));
  };
  EXPECT_NEAR(fid(s(0, 1), s(1, 1)), 1.0, 1e-12);
  EXPECT_NEAR(fid(s(0, 4), s(0, 1)), 1.0, 1e-12);
  EXPECT_NEAR(fid(s(2, 3), s(2, 3)), 0.0, 1e-12);
}

TEST(Fid, IdentitySymmetryAndOracle) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + trial % 16;
    Eigen::VectorXd mu_a(d), mu_b(d);
    for (int i = 0; i < d; ++i) {
      mu_a(i) = n(rng);
      mu_b(i) = n(rng);
    }
    const auto a = gaussian(mu_a, random_spd(d, rng));
    const auto b = gaussian(mu_b, random_spd(d, rng));
    EXPECT_LE(std::abs(fid(a, a)), 1e-6);
    EXPECT_NEAR(fid(a, b), fid(b, a), 1e-8);
    EXPECT_GE(fid(a, b), -1e-8);
    EXPECT_NEAR(fid(a, b), oracle_fid(a, b), 1e-6 * std::max(1.0, oracle_fid(a, b)));
  }
}

TEST(Fid, DiagonalClosedForm) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.05, 5.0), m(-2, 2);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 8;
    Eigen::VectorXd mu_a(d), mu_b(d), va(d), vb(d);
    double expected = 0;
    for (int i = 0; i < d; ++i) {
      mu_a(i) = m(rng);
      mu_b(i) = m(rng);
      va(i) = u(rng);
      vb(i) = u(rng);
      const double s = std::sqrt(va(i)) - std::sqrt(vb(i));
      expected += (mu_a(i) - mu_b(i)) * (mu_a(i) - mu_b(i)) + s * s;
    }
    EXPECT_NEAR(fid(gaussian(mu_a, va.asDiagonal()), gaussian(mu_b, vb.asDiagonal())), expected, 1e-6);
  }
}

TEST(Fid, SqrtOfProductSquaresBack) {
  std::mt19937_64 rng(5);
  for (int d : {1, 2, 5, 8, 16}) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto a = random_spd(d, rng);
      const auto b = random_spd(d, rng);
      const auto r = sqrtm_product(a, b);
      const Eigen::MatrixXd p = a * b;
      EXPECT_LE((r * r - p).norm() / p.norm(), 1e-6) << "d=" << d;
      EXPECT_NEAR(trace_sqrt_product(a, b), r.trace(), 1e-8 * std::max(1.0, r.trace()));
    }
  }
}

TEST(Fid, SingularCovarianceIsClipped) {
  // rank-deficient covariance from fewer samples than dimensions
  Eigen::MatrixXd f = Eigen::MatrixXd::Random(3, 6);
  const auto a = stats_from_features(f);
  FidDiagnostics diag;
  const double v = fid(a, a, &diag);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_LE(std::abs(v), 1e-6);
}

TEST(Fid, DimensionMismatch) {
  const auto a = gaussian(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
  const auto b = gaussian(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));
  EXPECT_ERROR_KIND(fid(a, b), ErrorKind::kShapeMismatch);
}

TEST(Fid, ReportThroughExtractor) {
  PixelExtractor ex;
  auto real = torch::zeros({2, 3, 2, 2});
  real[1][0][0][0] = 1.0;  // features {0, 1}: mean 0.5, var 0.5
  auto fake = real.clone() + 1.0;
  const auto report = fid_report(ex, real, fake);
  EXPECT_NEAR(report.fid, 1.0, 1e-12);
  EXPECT_EQ(report.n_real, 2);
  EXPECT_EQ(report.n_fake, 2);
  const auto j = report.to_json();
  EXPECT_EQ(j.at("extractor_id"), "pixel");
  EXPECT_TRUE(j.contains("fid"));
}

// ---- feature extractor -----------------------------------------------------

TEST(FrozenConvExtractor, DeterministicInSeed) {
  const auto imgs = torch::rand({3, 3, 16, 16}) * 2 - 1;
  FrozenConvExtractor a(7), b(7), c(8);
  const auto fa = a.extract(imgs);
  EXPECT_EQ(fa.sizes(), (std::vector<int64_t>{3, a.dim()}));
  EXPECT_EQ(fa.scalar_type(), torch::kFloat64);
  EXPECT_TRUE(torch::equal(fa, b.extract(imgs)));
  EXPECT_FALSE(torch::equal(fa, c.extract(imgs)));
  EXPECT_EQ(a.id(), b.id());
  EXPECT_NE(a.id(), c.id());
}

// ---- translation -----------------------------------------------------------

class TranslationFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { toy_ = new bt::ToyData(bt::make_toy_data(2, 5, 3, 8, 9)); }
  static void TearDownTestSuite() {
    delete toy_;
    toy_ = nullptr;
  }
  static bt::ToyData* toy_;
};
bt::ToyData* TranslationFixture::toy_ = nullptr;

TEST_F(TranslationFixture, TenSourcesThreeReferences) {
  torch::manual_seed(0);
  Generator g(tiny_model());
  const auto& src = toy_->manifest.source_items();
  const auto& ref = toy_->manifest.target_items();
  ASSERT_EQ(src.size(), 10u);
  ASSERT_EQ(ref.size(), 3u);
  const auto t = translate_dataset(g, toy_->store, src, ref, 42, 4);
  EXPECT_EQ(t.images.sizes(), (std::vector<int64_t>{10, 3, 8, 8}));
  ASSERT_EQ(t.pairing.pairs.size(), 10u);
  const std::set<std::string> pool(ref.begin(), ref.end());
  for (size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(t.pairing.pairs[i].first, src[i]);
    EXPECT_TRUE(pool.count(t.pairing.pairs[i].second));
  }
  EXPECT_EQ(translate_dataset(g, toy_->store, src, ref, 42).pairing, t.pairing);
  // row i equals a direct translation with the recorded reference
  const auto x = toy_->store.gather_ids(std::vector<std::string>{src[3]});
  const auto y = toy_->store.gather_ids(std::vector<std::string>{t.pairing.pairs[3].second});
  torch::NoGradGuard ng;
  g->eval();
  EXPECT_LT((g->forward(x, y)[0] - t.images[3]).abs().max().item<double>(), 1e-5);
}

TEST_F(TranslationFixture, PairingRoundTripAndErrors) {
  const auto p = make_pairing(toy_->manifest.source_items(), toy_->manifest.target_items(), 5);
  EXPECT_EQ(PairingManifest::parse(p.serialize()), p);
  EXPECT_EQ(p.seed, 5u);
  Generator g(tiny_model());
  const std::vector<std::string> none;
  EXPECT_ERROR_KIND(translate_dataset(g, toy_->store, none, toy_->manifest.target_items(), 0),
                    ErrorKind::kEmptyRequest);
  EXPECT_ERROR_KIND(translate_dataset(g, toy_->store, toy_->manifest.source_items(), none, 0),
                    ErrorKind::kEmptyRequest);
}

TEST_F(TranslationFixture, WriteTranslation) {
  Generator g(tiny_model());
  const auto t = translate_dataset(g, toy_->store, toy_->manifest.source_items(), toy_->manifest.target_items(), 1);
  bt::TempDir dir;
  write_translation(t, dir / "out");
  EXPECT_TRUE(fs::exists(dir / "out" / "000000.png"));
  EXPECT_TRUE(fs::exists(dir / "out" / "000009.png"));
  std::ifstream in(dir / "out" / "pairs.tsv");
  const std::string text{std::istreambuf_iterator<char>(in), {}};
  EXPECT_EQ(PairingManifest::parse(text), t.pairing);
}

TEST_F(TranslationFixture, DiversityGridLayout) {
  torch::manual_seed(1);
  Generator g(tiny_model());
  const auto xs = toy_->store.gather(std::vector<int64_t>{0, 1});
  const auto ys = toy_->store.gather(std::vector<int64_t>{10, 11, 12});
  const auto grid = diversity_grid(g, xs, ys, 2);
  EXPECT_EQ(grid.cells.sizes(), (std::vector<int64_t>{2, 3, 3, 8, 8}));
  EXPECT_EQ(grid.composite.sizes(), (std::vector<int64_t>{3, 2 * 8 + 2, 3 * 8 + 2 * 2}));
  torch::NoGradGuard ng;
  g->eval();
  for (int64_t i = 0; i < 2; ++i)
    for (int64_t j = 0; j < 3; ++j) {
      const auto direct = g->forward(xs.slice(0, i, i + 1), ys.slice(0, j, j + 1))[0];
      EXPECT_LT((grid.cells[i][j] - direct).abs().max().item<double>(), 1e-5);
      const auto tile = grid.composite.slice(1, i * 10, i * 10 + 8).slice(2, j * 10, j * 10 + 8);
      EXPECT_TRUE(torch::equal(tile, grid.cells[i][j]));
    }
  const auto single = diversity_grid(g, xs.slice(0, 0, 1), ys.slice(0, 0, 1));
  EXPECT_EQ(single.composite.sizes(), (std::vector<int64_t>{3, 8, 8}));
}

// ---- sweep -----------------------------------------------------------------

TEST_F(TranslationFixture, SweepRejectsDuplicateK) {
  bt::TempDir dir;
  RunConfig cfg;
  const std::vector<int64_t> ks{1, 2, 1};
  EXPECT_ERROR_KIND(k_sweep(cfg, ks, toy_->manifest, toy_->store, dir / "sweep"), ErrorKind::kDuplicateK);
  EXPECT_FALSE(fs::exists(dir / "sweep" / "sweep.tsv"));
}

TEST_F(TranslationFixture, SingleKSweep) {
  auto toy = bt::make_toy_data(1, 3, 4, 8, 2);
  RunConfig cfg;
  cfg.name = "s";
  cfg.seed = 1;
  cfg.data.resolution = {8, 8};
  cfg.model = tiny_model();
  cfg.modalities.encoder.base_channels = 4;
  cfg.modalities.encoder.embedding_dim = 8;
  cfg.modalities.encoder.projection_dim = 4;
  cfg.modalities.contrastive.steps = 1;
  cfg.modalities.contrastive.batch_size = 3;
  cfg.modalities.contrastive.monitor_size = 3;
  cfg.trainer.steps = 2;
  cfg.trainer.batch_size = 2;
  cfg.trainer.checkpoint_every = 2;
  bt::TempDir dir;
  std::vector<SweepRow> seen;
  SweepOptions opts;
  opts.on_row = [&](const SweepRow& r) { seen.push_back(r); };
  const std::vector<int64_t> ks{1};
  const auto rows = k_sweep(cfg, ks, toy.manifest, toy.store, dir / "sweep", opts);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(seen.size(), 1u);
  EXPECT_EQ(rows[0].k, 1);
  ASSERT_TRUE(rows[0].fid.has_value()) << rows[0].error;
  EXPECT_GE(*rows[0].fid, 0.0);
  EXPECT_TRUE(fs::exists(dir / "sweep" / "sweep.tsv"));
  EXPECT_TRUE(fs::exists(dir / "sweep" / "sweep.json"));
  EXPECT_TRUE(fs::exists(rows[0].run_dir / "fid.json"));
  EXPECT_TRUE(fs::exists(rows[0].run_dir / "modalities.assign"));
}

TEST_F(TranslationFixture, SweepRecordsFailuresAndContinues) {
  auto toy = bt::make_toy_data(1, 3, 4, 8, 2);
  RunConfig cfg;
  cfg.name = "f";
  cfg.data.resolution = {8, 8};
  cfg.model = tiny_model();
  cfg.modalities.allow_invalid_k = true;
  cfg.modalities.encoder.base_channels = 4;
  cfg.modalities.encoder.embedding_dim = 8;
  cfg.modalities.encoder.projection_dim = 4;
  cfg.modalities.contrastive.steps = 1;
  cfg.modalities.contrastive.batch_size = 3;
  cfg.modalities.contrastive.monitor_size = 3;
  cfg.trainer.steps = 1;
  cfg.trainer.batch_size = 2;
  bt::TempDir dir;
  // a plain file where the k=2 run directory should go fails that row only
  fs::create_directories(dir / "sweep");
  std::ofstream(dir / "sweep" / "f-k2") << "blocker";
  const std::vector<int64_t> ks{2, 1};
  const auto rows = k_sweep(cfg, ks, toy.manifest, toy.store, dir / "sweep");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_FALSE(rows[0].fid.has_value());
  EXPECT_FALSE(rows[0].error.empty());
  EXPECT_TRUE(rows[1].fid.has_value()) << rows[1].error;
  const auto table = sweep_table(rows);
  EXPECT_NE(table.find("k"), std::string::npos);
}
