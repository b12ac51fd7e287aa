#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>

#include "arepas/patch_siamese.hpp"
#include "arepas/synthdata.hpp"
#include "test_util.hpp"

using namespace arepas;
using namespace arepas::siamese;

namespace {

Image2D full_image(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Image2D img;
  img.pixels = testing_util::random_grid(rng, n, n, -1.0, 1.0);
  return img;
}

double contrastive(const std::vector<double>& a, const std::vector<double>& y) {
  return contrastive_loss(torch::tensor(a, torch::kDouble), torch::tensor(y, torch::kDouble)).item<double>();
}

}  // namespace

TEST(PatchPairs, PositivesShareOriginNegativesSeparated) {
  const auto real = full_image(64, 1);
  const auto rec = full_image(64, 2);
  Rng rng(3);
  const auto pairs = sample_patch_pairs(real, rec, 16, 200, 0.5, rng);
  ASSERT_EQ(pairs.size(), 400u);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    EXPECT_EQ(p.real_patch.source, PatchSource::kReal);
    EXPECT_EQ(p.rec_patch.source, PatchSource::kRec);
    EXPECT_EQ(p.real_patch.pixels.rows(), 16);
    if (i < 200) {
      EXPECT_EQ(p.label, 1);
      EXPECT_EQ(p.real_patch.origin, p.rec_patch.origin);
    } else {
      EXPECT_EQ(p.label, 0);
      const int d = std::max(std::abs(p.real_patch.origin.row - p.rec_patch.origin.row),
                             std::abs(p.real_patch.origin.col - p.rec_patch.origin.col));
      EXPECT_GE(2 * d, 16);
    }
    EXPECT_EQ(p.real_patch.pixels(3, 5), real.pixels(p.real_patch.origin.row + 3, p.real_patch.origin.col + 5));
  }
  Image2D tiny = full_image(8, 4);
  EXPECT_THROW(sample_patch_pairs(tiny, tiny, 16, 1, 0.5, rng), Error);
}

TEST(PatchPairs, OriginsUniformOverValidPositions) {
  const auto img = full_image(64, 5);
  Rng rng(6);
  const int s = 16, span = 64 - s + 1;  // 49 positions per axis
  std::vector<double> counts(16, 0.0), expected(16, 0.0);
  const auto bin = [&](int v) { return std::min(3, v * 4 / span); };
  for (int r = 0; r < span; ++r)
    for (int c = 0; c < span; ++c) expected[bin(r) * 4 + bin(c)] += 1.0;
  const auto pairs = sample_patch_pairs(img, img, s, 10000, 0.5, rng);
  for (int i = 0; i < 10000; ++i) {
    const auto o = pairs[i].real_patch.origin;
    counts[bin(o.row) * 4 + bin(o.col)] += 1.0;
  }
  double chi2 = 0;
  for (int k = 0; k < 16; ++k) {
    const double e = expected[k] / (span * span) * 10000.0;
    chi2 += (counts[k] - e) * (counts[k] - e) / e;
  }
  const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(15), chi2));
  EXPECT_GT(p, 0.001) << "chi2 " << chi2;
}

TEST(PatchPairs, RespectsForegroundRequirement) {
  synth::SynthConfig cfg;
  auto g = derive_rng(2, 2);
  const auto img = synth::gen_normal(g, cfg);
  const auto origins = valid_origins(img, 16, 0.5);
  ASSERT_FALSE(origins.empty());
  const auto fg = img.foreground();
  for (const auto& o : origins) {
    int n = 0;
    for (int r = 0; r < 16; ++r)
      for (int c = 0; c < 16; ++c) n += fg(o.row + r, o.col + c) != 0;
    EXPECT_GE(n, 128);
  }
  EXPECT_LT(origins.size(), 49u * 49u);
}

TEST(Encoder, SharedWeightsDimensionAndRange) {
  torch::manual_seed(0);
  auto enc = build_encoder(SiameseSpec{});
  const auto img = full_image(16, 7);
  const auto p = extract_patch(img.pixels, {0, 0}, 16, PatchSource::kReal);
  auto q = p;
  q.source = PatchSource::kRec;
  const auto e1 = embed(p, enc);
  ASSERT_EQ(e1.size(), 10u);
  EXPECT_EQ(e1, embed(q, enc));
  for (double v : e1) {
    EXPECT_GT(v, -1.0);
    EXPECT_LT(v, 1.0);
  }
  EXPECT_DOUBLE_EQ(similarity(p, q, enc), 1.0);
}

TEST(Similarity, ClosedFormsAndMonotone) {
  EXPECT_DOUBLE_EQ(similarity_from_distance(0.0), 1.0);
  EXPECT_NEAR(similarity_from_distance(std::log(3.0)), 0.5, 1e-15);
  const auto e1 = torch::zeros({1, 10}, torch::kDouble);
  auto e2 = torch::zeros({1, 10}, torch::kDouble);
  e2[0][0] = std::log(3.0);
  EXPECT_NEAR(similarity_from_embeddings(e1, e2).item<double>(), 0.5, 1e-12);
  torch::manual_seed(4);
  const auto a = torch::randn({500, 10}, torch::kDouble), b = torch::randn({500, 10}, torch::kDouble);
  const auto d = (a - b).norm(2, 1);
  const auto s = similarity_from_embeddings(a, b);
  const auto order = d.argsort();
  for (int i = 1; i < 500; ++i) {
    EXPECT_LE(s[order[i]].item<double>(), s[order[i - 1]].item<double>());
  }
}

TEST(Contrastive, HandEvaluatedBatches) {
  EXPECT_NEAR(contrastive({1.0}, {1.0}), 0.0, 1e-12);
  EXPECT_NEAR(contrastive({0.6}, {0.0}), 0.36, 1e-12);
  EXPECT_NEAR(contrastive({0.2, 0.5}, {1.0, 0.0}), 0.445, 1e-12);
  EXPECT_NEAR(contrastive({1.4}, {1.0}), 0.0, 1e-12);
  EXPECT_THROW(contrastive_loss(torch::zeros({0}), torch::zeros({0})), Error);
  EXPECT_THROW(contrastive_loss(torch::zeros({2}), torch::zeros({3})), Error);
}

TEST(Contrastive, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.01, 0.95);
  std::vector<double> a(32), y(32);
  for (int k = 0; k < 32; ++k) {
    a[k] = u(rng);
    y[k] = k % 2;
  }
  auto at = torch::tensor(a, torch::kDouble).requires_grad_(true);
  contrastive_loss(at, torch::tensor(y, torch::kDouble)).backward();
  const double h = 1e-6;
  for (int k = 0; k < 32; ++k) {
    auto ap = a, am = a;
    ap[k] += h;
    am[k] -= h;
    const double fd = (contrastive(ap, y) - contrastive(am, y)) / (2 * h);
    const double an = at.grad()[k].item<double>();
    EXPECT_LT(std::abs(fd - an) / std::abs(an), 1e-6);
  }
}

TEST(ScorerTraining, ToyTaskLearnsPositives) {
  std::vector<Image2D> images;
  synth::SynthConfig cfg;
  cfg.image_size = 32;
  for (int i = 0; i < 12; ++i) {
    auto g = derive_rng(9, i);
    images.push_back(synth::gen_normal(g, cfg));
  }
  std::vector<ImagePair> pairs;
  for (const auto& img : images) pairs.push_back({&img, &img});
  ScorerTrainOptions opts;
  opts.spec.patch_size = 8;
  opts.config.epochs = 5;
  opts.config.batch_size = 64;
  opts.config.pairs_per_image = 32;
  opts.config.validation_fraction = 0.25;
  opts.config.seed = 1;
  const auto ckpt = train_scorer(pairs, opts);
  ASSERT_EQ(ckpt.log.size(), 5u);
  double best = 0;
  for (const auto& e : ckpt.log) best = std::max(best, e.val_accuracy);
  EXPECT_GT(best, 0.9);
  EXPECT_EQ(ckpt.log[ckpt.best_epoch - 1].val_accuracy, best);
  EXPECT_LE(ckpt.log[ckpt.best_epoch - 1].loss, ckpt.log[0].loss);

  // Rec == real, so every same-origin patch pair is identical: a == 1.
  SiameseScorer scorer(ckpt.encoder);
  const std::vector<infer::Origin> origins = {{0, 0}, {8, 8}, {24, 24}};
  for (double a : scorer.score(images[0].pixels, images[0].pixels, origins, 8)) EXPECT_NEAR(a, 1.0, 1e-12);
  EXPECT_THROW(scorer.score(images[0].pixels, images[0].pixels, origins, 16), Error);

  const auto again = train_scorer(pairs, opts);
  EXPECT_EQ(again.log[0].loss, ckpt.log[0].loss);

  testing_util::TempDir dir("scorer");
  save_checkpoint(ckpt, dir.path() / "s.ckpt");
  auto loaded = load_checkpoint(dir.path() / "s.ckpt");
  EXPECT_EQ(loaded.best_epoch, ckpt.best_epoch);
  const auto p = extract_patch(images[1].pixels, {4, 4}, 8, PatchSource::kReal);
  auto enc = ckpt.encoder;
  EXPECT_EQ(embed(p, loaded.encoder), embed(p, enc));
}
