#include <gtest/gtest.h>

#include <cmath>

#include "arepas/recon_gan.hpp"
#include "arepas/synthdata.hpp"
#include "arepas/tensor_util.hpp"
#include "test_util.hpp"

using namespace arepas;
using namespace arepas::recon;

namespace {

GeneratorSpec small_generator() {
  GeneratorSpec g;
  g.base_filters = 8;
  g.resnet_blocks = 2;
  return g;
}

DiscriminatorSpec small_discriminator() {
  DiscriminatorSpec d;
  d.widths = {8, 16, 32, 32, 1};
  return d;
}

std::vector<std::shared_ptr<const Image2D>> synth_images(int n, int size, std::uint64_t seed) {
  synth::SynthConfig cfg;
  cfg.image_size = size;
  std::vector<std::shared_ptr<const Image2D>> out;
  for (int i = 0; i < n; ++i) {
    auto rng = derive_rng(seed, i);
    out.push_back(std::make_shared<const Image2D>(synth::gen_normal(rng, cfg)));
  }
  return out;
}

std::vector<augment::TrainingPair> clean_pairs(const std::vector<std::shared_ptr<const Image2D>>& imgs) {
  std::vector<augment::TrainingPair> pairs;
  for (const auto& img : imgs) pairs.push_back({imgproc::canny_edges(*img), img});
  return pairs;
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

TEST(Generator, PreservesSpatialSize) {
  torch::manual_seed(0);
  auto g = build_generator(small_generator());
  g->eval();
  torch::NoGradGuard ng;
  const auto out = g->forward(torch::rand({2, 1, 64, 64}));
  EXPECT_EQ(out.sizes(), (std::vector<std::int64_t>{2, 1, 64, 64}));
  EXPECT_LE(out.max().item<double>(), 1.0);
  EXPECT_GE(out.min().item<double>(), -1.0);

  GeneratorSpec tiny;
  tiny.base_filters = 4;
  tiny.resnet_blocks = 1;
  auto big = build_generator(tiny);
  big->eval();
  EXPECT_EQ(big->forward(torch::rand({1, 1, 256, 256})).sizes(), (std::vector<std::int64_t>{1, 1, 256, 256}));
}

TEST(Generator, ParameterCountDeterministic) {
  EXPECT_EQ(parameter_count(*build_generator(GeneratorSpec{})), parameter_count(*build_generator(GeneratorSpec{})));
  EXPECT_EQ(parameter_count(*build_discriminator(DiscriminatorSpec{})),
            parameter_count(*build_discriminator(DiscriminatorSpec{})));
  GeneratorSpec bad;
  bad.base_filters = 0;
  EXPECT_THROW(validate(bad), Error);
}

TEST(Discriminator, SpectralNormBoundsSingularValue) {
  torch::manual_seed(1);
  SpectralConv2d conv(3, 5, 4, 2, 1);
  conv->train();
  for (int i = 0; i < 50; ++i) conv->normalized_weight();
  const auto w = conv->normalized_weight().reshape({5, -1});
  const auto s = torch::linalg_svdvals(w);
  EXPECT_NEAR(s.max().item<double>(), 1.0, 1e-3);

  auto d = build_discriminator(small_discriminator());
  EXPECT_EQ(d->forward(torch::rand({1, 2, 64, 64})).size(1), 1);
}

TEST(GeneratorLoss, IdenticalInputsAndZeroLogits) {
  ReconTrainConfig cfg;
  const auto x = torch::rand({2, 1, 8, 8});
  const auto t = generator_loss(x, x, torch::zeros({2, 1, 3, 3}), nullptr, cfg);
  EXPECT_EQ(t.breakdown.l1, 0.0);
  EXPECT_EQ(t.breakdown.perceptual, 0.0);
  EXPECT_NEAR(t.breakdown.adversarial, std::log(2.0), 1e-6);
  EXPECT_THROW(generator_loss(x, torch::rand({2, 1, 4, 4}), torch::zeros({1}), nullptr, cfg), Error);
}

TEST(GeneratorLoss, PerceptualTermUsesExtractor) {
  ReconTrainConfig cfg;
  cfg.lambda_perceptual = 2.0;
  FeatureExtractor square = [](const torch::Tensor& x) { return x * x; };
  const auto fake = torch::full({1, 1, 2, 2}, 0.5, torch::kDouble);
  const auto real = torch::full({1, 1, 2, 2}, 0.25, torch::kDouble);
  const auto t = generator_loss(fake, real, torch::zeros({1, 1}, torch::kDouble), &square, cfg);
  EXPECT_NEAR(t.breakdown.perceptual, std::pow(0.25 - 0.0625, 2), 1e-12);
  EXPECT_NEAR(t.breakdown.total, std::log(2.0) + 100.0 * 0.25 + 2.0 * t.breakdown.perceptual, 1e-9);
  cfg.use_perceptual = false;
  EXPECT_EQ(generator_loss(fake, real, torch::zeros({1, 1}, torch::kDouble), &square, cfg).breakdown.perceptual, 0.0);
}

TEST(GeneratorLoss, TotalIsWeightedSum) {
  torch::manual_seed(2);
  ReconTrainConfig cfg;
  for (int i = 0; i < 20; ++i) {
    const auto fake = torch::rand({1, 1, 8, 8}, torch::kDouble) * 2 - 1;
    const auto real = torch::rand({1, 1, 8, 8}, torch::kDouble) * 2 - 1;
    const auto logits = torch::randn({1, 1, 3, 3}, torch::kDouble) * 3;
    const auto t = generator_loss(fake, real, logits, nullptr, cfg);
    double adv = 0, l1 = 0;
    const auto lf = logits.contiguous();
    for (int k = 0; k < 9; ++k) adv += softplus(-lf.data_ptr<double>()[k]);
    adv /= 9;
    const auto f = fake.contiguous(), r = real.contiguous();
    for (int k = 0; k < 64; ++k) l1 += std::abs(f.data_ptr<double>()[k] - r.data_ptr<double>()[k]);
    l1 /= 64;
    EXPECT_NEAR(t.breakdown.adversarial, adv, 1e-9);
    EXPECT_NEAR(t.breakdown.l1, l1, 1e-9);
    EXPECT_NEAR(t.breakdown.total, adv + 100.0 * l1, 1e-6);
    EXPECT_NEAR(t.total.item<double>(), t.breakdown.total, 1e-6);
  }
}

TEST(DiscriminatorLoss, ClosedForms) {
  ReconTrainConfig cfg;
  const auto zero = torch::zeros({1, 1, 2, 2}, torch::kDouble);
  const auto ten = torch::full({1, 1, 2, 2}, 10.0, torch::kDouble);
  const auto t = discriminator_loss(ten, zero, torch::zeros({}, torch::kDouble), cfg);
  EXPECT_NEAR(t.breakdown.d_real, 0.1 * std::log1p(std::exp(10.0)) + 0.9 * std::log1p(std::exp(-10.0)), 1e-9);
  EXPECT_NEAR(t.breakdown.d_fake, std::log(2.0), 1e-9);
  EXPECT_NEAR(t.breakdown.d_total, t.breakdown.d_real + t.breakdown.d_fake, 1e-12);
  const auto with_gp = discriminator_loss(ten, zero, torch::full({}, 0.5, torch::kDouble), cfg);
  EXPECT_NEAR(with_gp.breakdown.d_total, t.breakdown.d_total + cfg.lambda_gp * 0.5, 1e-12);
}

TEST(GradientPenalty, LinearAndConstantCritics) {
  const auto real = torch::rand({3, 1, 8, 8}, torch::kDouble);
  const auto fake = torch::rand({3, 1, 8, 8}, torch::kDouble);
  const Critic linear = [](const torch::Tensor& x) { return x.sum({1, 2, 3}); };
  EXPECT_NEAR(gradient_penalty(linear, real, fake).item<double>(), std::pow(std::sqrt(64.0) - 1.0, 2), 1e-9);
  const Critic constant = [](const torch::Tensor& x) { return torch::zeros({x.size(0)}, x.options()); };
  EXPECT_NEAR(gradient_penalty(constant, real, fake).item<double>(), 1.0, 1e-12);

  // Conditioned: only the image half of the input is differentiated.
  const auto cond = torch::rand({3, 1, 8, 8}, torch::kDouble);
  EXPECT_NEAR(gradient_penalty(linear, real, fake, cond).item<double>(), 49.0, 1e-9);

  auto d = build_discriminator(small_discriminator());
  const Critic critic = [&](const torch::Tensor& x) { return d->forward(x); };
  const auto gp = gradient_penalty(critic, torch::rand({2, 1, 64, 64}), torch::rand({2, 1, 64, 64}),
                                   torch::rand({2, 1, 64, 64}));
  EXPECT_GE(gp.item<double>(), 0.0);
  EXPECT_TRUE(gp.requires_grad());
}

TEST(GeneratorLoss, GradientMatchesFiniteDifferences) {
  torch::manual_seed(3);
  DiscriminatorSpec ds;
  ds.widths = {4, 1};
  ds.strided_layers = 1;
  auto d = build_discriminator(ds);
  d->to(torch::kDouble);
  d->eval();
  ReconTrainConfig cfg;
  cfg.use_perceptual = false;
  const auto edges = (torch::rand({1, 1, 8, 8}, torch::kDouble) > 0.7).to(torch::kDouble);
  const auto real = torch::rand({1, 1, 8, 8}, torch::kDouble) * 2 - 1;
  auto fake = (real + torch::where(torch::rand_like(real) > 0.5, 1.0, -1.0) * (0.05 + 0.2 * torch::rand_like(real)))
                  .detach()
                  .requires_grad_(true);
  const auto loss_at = [&](const torch::Tensor& f) {
    return generator_loss(f, real, d->forward(torch::cat({edges, f}, 1)), nullptr, cfg).total;
  };
  loss_at(fake).backward();
  const auto grad = fake.grad().clone();
  torch::NoGradGuard ng;
  const double h = 1e-6;
  for (int k = 0; k < 64; ++k) {
    auto plus = fake.detach().clone(), minus = fake.detach().clone();
    plus.view(-1)[k] += h;
    minus.view(-1)[k] -= h;
    const double fd = (loss_at(plus).item<double>() - loss_at(minus).item<double>()) / (2 * h);
    const double an = grad.view(-1)[k].item<double>();
    EXPECT_LT(std::abs(fd - an) / std::max(std::abs(an), 1e-12), 1e-3) << "pixel " << k;
  }
}

TEST(Training, ToyRunFiniteAndDeterministic) {
  const auto imgs = synth_images(2, 32, 5);
  ReconTrainOptions opts;
  opts.generator_spec = small_generator();
  opts.discriminator_spec = small_discriminator();
  opts.config.use_perceptual = false;
  opts.config.seed = 17;
  opts.validation = {imgs[0]};
  const auto a = train_reconstructor(clean_pairs(imgs), opts);
  ASSERT_EQ(a.log.size(), 10u);
  for (const auto& e : a.log) {
    for (double v : {e.mean.total, e.mean.d_total, e.mean.gp, e.val_l1_mean}) EXPECT_TRUE(std::isfinite(v));
  }
  const auto b = train_reconstructor(clean_pairs(imgs), opts);
  EXPECT_EQ(a.first_step.total, b.first_step.total);
  EXPECT_EQ(a.first_step.d_total, b.first_step.d_total);
  EXPECT_EQ(a.first_step.gp, b.first_step.gp);

  opts.config.use_perceptual = true;
  EXPECT_THROW(train_reconstructor(clean_pairs(imgs), opts), Error);
}

TEST(Training, CheckpointRoundTripAndInference) {
  const auto imgs = synth_images(2, 32, 6);
  ReconTrainOptions opts;
  opts.generator_spec = small_generator();
  opts.discriminator_spec = small_discriminator();
  opts.config.use_perceptual = false;
  opts.config.epochs = 1;
  const auto ckpt = train_reconstructor(clean_pairs(imgs), opts);
  testing_util::TempDir dir("recon");
  save_checkpoint(ckpt, dir.path() / "r.ckpt");
  const auto loaded = load_checkpoint(dir.path() / "r.ckpt");
  EXPECT_EQ(loaded.image_size, 32);
  const auto r1 = reconstruct(*imgs[1], ckpt);
  const auto r2 = reconstruct(*imgs[1], loaded);
  EXPECT_EQ(r1.pixels, r2.pixels);
  EXPECT_TRUE(r1.pixels.same_shape(imgs[1]->pixels));
  for (double v : r1.pixels) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
  const auto wrong = synth_images(1, 64, 7);
  EXPECT_THROW(reconstruct(*wrong[0], ckpt), Error);
}

TEST(TrainingSlow, BeatsConstantMeanPredictor) {
  const auto train = synth_images(40, 64, 8);
  const auto held_out = synth_images(10, 64, 9);
  ReconTrainOptions opts;
  opts.generator_spec = small_generator();
  opts.discriminator_spec = small_discriminator();
  opts.config.use_perceptual = false;
  opts.config.seed = 3;
  opts.validation = held_out;
  const auto ckpt = train_reconstructor(clean_pairs(train), opts);

  RealGrid mean(64, 64, 0.0);
  for (const auto& img : train)
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += img->pixels[i] / train.size();
  double baseline = 0, model = 0;
  std::vector<double> errors;
  for (const auto& img : held_out) {
    const auto rec = reconstruct(*img, ckpt);
    double e = 0;
    for (std::size_t i = 0; i < mean.size(); ++i) {
      baseline += std::abs(mean[i] - img->pixels[i]);
      e += std::abs(rec.pixels[i] - img->pixels[i]);
    }
    errors.push_back(e / mean.size());
    model += e;
  }
  EXPECT_LT(model, baseline);
  EXPECT_NEAR(ckpt.log.back().val_l1_mean, model / (10.0 * mean.size()), 1e-9);
  // A fresh normal image reconstructs within the logged validation spread.
  const auto fresh = synth_images(1, 64, 10)[0];
  const auto rec = reconstruct(*fresh, ckpt);
  double e = 0;
  for (std::size_t i = 0; i < rec.pixels.size(); ++i) e += std::abs(rec.pixels[i] - fresh->pixels[i]);
  EXPECT_LT(e / rec.pixels.size(), ckpt.log.back().val_l1_mean + 3 * ckpt.log.back().val_l1_std);
}
