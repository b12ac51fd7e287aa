#include "arepas/recon_gan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "arepas/archive.hpp"
#include "arepas/imgproc.hpp"
#include "arepas/tensor_util.hpp"
#include "json_io.hpp"

namespace arepas::recon {

namespace nn = torch::nn;

// ---------------------------------------------------------------------------
// Specs
// ---------------------------------------------------------------------------

void validate(const GeneratorSpec& spec) {
  if (spec.in_channels < 1 || spec.out_channels < 1 || spec.base_filters < 1 ||
      spec.downsample_layers < 0 || spec.resnet_blocks < 0) {
    throw Error(ErrorCode::kConfig, "generator spec: channel and layer counts must be positive");
  }
  if (spec.dropout < 0.0 || spec.dropout >= 1.0) {
    throw Error(ErrorCode::kConfig, "generator spec: dropout must be in [0, 1)");
  }
}

void validate(const DiscriminatorSpec& spec) {
  if (spec.widths.empty() || spec.widths.back() != 1) {
    throw Error(ErrorCode::kConfig, "discriminator spec: last width must be 1 (patch logits)");
  }
  if (spec.in_channels < 1 || spec.kernel < 1 || spec.strided_layers < 0 ||
      spec.strided_layers > static_cast<int>(spec.widths.size())) {
    throw Error(ErrorCode::kConfig, "discriminator spec: invalid layer configuration");
  }
  for (int w : spec.widths) {
    if (w < 1) throw Error(ErrorCode::kConfig, "discriminator spec: widths must be positive");
  }
}

void validate(const ReconTrainConfig& cfg) {
  if (cfg.lambda_l1 < 0 || cfg.lambda_perceptual < 0 || cfg.lambda_gp < 0) {
    throw Error(ErrorCode::kConfig, "recon config: loss weights must be non-negative");
  }
  if (!(cfg.real_label > 0.0 && cfg.real_label <= 1.0)) {
    throw Error(ErrorCode::kConfig, "recon config: real_label must be in (0, 1]");
  }
  if (!(cfg.lr > 0.0) || cfg.batch_size < 1 || cfg.epochs < 0) {
    throw Error(ErrorCode::kConfig, "recon config: need lr > 0, batch_size >= 1, epochs >= 0");
  }
}

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

SpectralConv2dImpl::SpectralConv2dImpl(int in_channels, int out_channels, int kernel, int stride,
                                       int padding)
    : stride_(stride), padding_(padding) {
  weight_ = register_parameter("weight", torch::randn({out_channels, in_channels, kernel, kernel}) * 0.02);
  bias_ = register_parameter("bias", torch::zeros({out_channels}));
  u_ = register_buffer("u", torch::nn::functional::normalize(torch::randn({out_channels}),
                                                            nn::functional::NormalizeFuncOptions().dim(0)));
  v_ = register_buffer("v", torch::nn::functional::normalize(torch::randn({in_channels * kernel * kernel}),
                                                            nn::functional::NormalizeFuncOptions().dim(0)));
}

torch::Tensor SpectralConv2dImpl::normalized_weight() {
  const auto matrix = weight_.reshape({weight_.size(0), -1});
  torch::Tensor u = u_;
  torch::Tensor v = v_;
  if (is_training()) {
    torch::NoGradGuard no_grad;
    const auto opts = nn::functional::NormalizeFuncOptions().dim(0).eps(1e-12);
    v = nn::functional::normalize(torch::mv(matrix.t(), u_), opts);
    u = nn::functional::normalize(torch::mv(matrix, v), opts);
    u_.copy_(u);
    v_.copy_(v);
    u = u.clone();
    v = v.clone();
  }
  const auto sigma = torch::dot(u, torch::mv(matrix, v));
  return weight_ / sigma;
}

torch::Tensor SpectralConv2dImpl::forward(const torch::Tensor& x) {
  return torch::conv2d(x, normalized_weight(), bias_, stride_, padding_);
}

ResnetBlockImpl::ResnetBlockImpl(int channels, double dropout) {
  body_->push_back(nn::ReflectionPad2d(1));
  body_->push_back(nn::Conv2d(nn::Conv2dOptions(channels, channels, 3)));
  body_->push_back(nn::InstanceNorm2d(channels));
  body_->push_back(nn::ReLU());
  if (dropout > 0.0) body_->push_back(nn::Dropout(dropout));
  body_->push_back(nn::ReflectionPad2d(1));
  body_->push_back(nn::Conv2d(nn::Conv2dOptions(channels, channels, 3)));
  body_->push_back(nn::InstanceNorm2d(channels));
  register_module("body", body_);
}

torch::Tensor ResnetBlockImpl::forward(const torch::Tensor& x) { return x + body_->forward(x); }

GeneratorImpl::GeneratorImpl(const GeneratorSpec& spec) : spec_(spec) {
  validate(spec);
  const int f = spec.base_filters;
  net_->push_back(nn::ReflectionPad2d(3));
  net_->push_back(nn::Conv2d(nn::Conv2dOptions(spec.in_channels, f, 7)));
  net_->push_back(nn::InstanceNorm2d(f));
  net_->push_back(nn::ReLU());
  int channels = f;
  for (int i = 0; i < spec.downsample_layers; ++i) {
    net_->push_back(nn::Conv2d(nn::Conv2dOptions(channels, channels * 2, 3).stride(2).padding(1)));
    net_->push_back(nn::InstanceNorm2d(channels * 2));
    net_->push_back(nn::ReLU());
    channels *= 2;
  }
  for (int i = 0; i < spec.resnet_blocks; ++i) net_->push_back(ResnetBlock(channels, spec.dropout));
  for (int i = 0; i < spec.downsample_layers; ++i) {
    net_->push_back(nn::ConvTranspose2d(
        nn::ConvTranspose2dOptions(channels, channels / 2, 3).stride(2).padding(1).output_padding(1)));
    net_->push_back(nn::InstanceNorm2d(channels / 2));
    net_->push_back(nn::ReLU());
    channels /= 2;
  }
  net_->push_back(nn::ReflectionPad2d(3));
  net_->push_back(nn::Conv2d(nn::Conv2dOptions(channels, spec.out_channels, 7)));
  net_->push_back(nn::Tanh());
  register_module("net", net_);
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& x) {
  const int factor = 1 << spec_.downsample_layers;
  if (x.dim() != 4 || x.size(2) % factor != 0 || x.size(3) % factor != 0) {
    throw Error(ErrorCode::kShapeMismatch,
                "generator: input side must be divisible by " + std::to_string(factor));
  }
  return net_->forward(x);
}

DiscriminatorImpl::DiscriminatorImpl(const DiscriminatorSpec& spec) : spec_(spec) {
  validate(spec);
  int in = spec.in_channels;
  for (std::size_t i = 0; i < spec.widths.size(); ++i) {
    const int stride = static_cast<int>(i) < spec.strided_layers ? 2 : 1;
    convs_.push_back(register_module("conv" + std::to_string(i),
                                     SpectralConv2d(in, spec.widths[i], spec.kernel, stride, 1)));
    in = spec.widths[i];
  }
}

torch::Tensor DiscriminatorImpl::forward(const torch::Tensor& x) {
  auto h = x;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    h = convs_[i]->forward(h);
    if (i + 1 < convs_.size()) h = torch::leaky_relu(h, spec_.leaky_slope);
  }
  return h;
}

namespace {

void init_normal(nn::Module& module) {
  torch::NoGradGuard no_grad;
  for (auto& item : module.named_parameters(true)) {
    const auto& key = item.key();
    auto& p = item.value();
    if (key.ends_with("bias")) {
      p.zero_();
    } else if (p.dim() == 4) {
      p.normal_(0.0, 0.02);
    }
  }
}

}  // namespace

Generator build_generator(const GeneratorSpec& spec) {
  Generator g(spec);
  init_normal(*g);
  return g;
}

Discriminator build_discriminator(const DiscriminatorSpec& spec) { return Discriminator(spec); }

std::int64_t parameter_count(const nn::Module& module) {
  std::int64_t n = 0;
  for (const auto& p : module.parameters(true)) n += p.numel();
  return n;
}

// ---------------------------------------------------------------------------
// VGG perceptual trunk
// ---------------------------------------------------------------------------

Vgg19Block3Impl::Vgg19Block3Impl() {
  const std::vector<int> plan = {64, 64, -1, 128, 128, -1, 256, 256, 256};
  int in = 3;
  for (int width : plan) {
    if (width < 0) {
      trunk_->push_back(nn::MaxPool2d(nn::MaxPool2dOptions(2).stride(2)));
      continue;
    }
    trunk_->push_back(nn::Conv2d(nn::Conv2dOptions(in, width, 3).padding(1)));
    trunk_->push_back(nn::ReLU());
    in = width;
  }
  register_module("trunk", trunk_);
}

torch::Tensor Vgg19Block3Impl::forward(const torch::Tensor& x) {
  const auto mean = torch::tensor({0.485, 0.456, 0.406}, x.options()).view({1, 3, 1, 1});
  const auto stdev = torch::tensor({0.229, 0.224, 0.225}, x.options()).view({1, 3, 1, 1});
  const auto rgb = ((x + 1.0) * 0.5).expand({x.size(0), 3, x.size(2), x.size(3)});
  return trunk_->forward((rgb - mean) / stdev);
}

FeatureExtractor load_vgg19_extractor(const std::filesystem::path& weights) {
  auto vgg = Vgg19Block3();
  const auto archive = archive::read_file(weights);
  if (archive.kind != "vgg19_block3") {
    throw Error(ErrorCode::kCheckpoint, "perceptual weights: expected kind vgg19_block3, got " + archive.kind);
  }
  archive::load_module_state(*vgg, archive.tensors, "");
  vgg->eval();
  for (auto& p : vgg->parameters()) p.set_requires_grad(false);
  return [vgg](const torch::Tensor& x) mutable {
    if (vgg->parameters().front().device() != x.device() ||
        vgg->parameters().front().scalar_type() != x.scalar_type()) {
      vgg->to(x.device(), x.scalar_type());
    }
    return vgg->forward(x);
  };
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

torch::Tensor bce_with_logits(const torch::Tensor& logits, double target) {
  return torch::binary_cross_entropy_with_logits(logits, torch::full_like(logits, target));
}

LossTerms generator_loss(const torch::Tensor& fake, const torch::Tensor& real,
                         const torch::Tensor& d_fake_logits, const FeatureExtractor* extractor,
                         const ReconTrainConfig& cfg) {
  if (fake.sizes() != real.sizes()) throw Error(ErrorCode::kShapeMismatch, "generator_loss: fake/real shape");
  LossTerms out;
  const auto adversarial = bce_with_logits(d_fake_logits, 1.0);
  const auto l1 = (fake - real).abs().mean();
  auto total = adversarial + cfg.lambda_l1 * l1;
  out.breakdown.adversarial = adversarial.item<double>();
  out.breakdown.l1 = l1.item<double>();
  if (cfg.use_perceptual && extractor && *extractor) {
    const auto target_features = (*extractor)(real).detach();
    const auto perceptual = torch::mse_loss((*extractor)(fake), target_features);
    total = total + cfg.lambda_perceptual * perceptual;
    out.breakdown.perceptual = perceptual.item<double>();
  }
  out.breakdown.total = out.breakdown.adversarial + cfg.lambda_l1 * out.breakdown.l1 +
                        cfg.lambda_perceptual * out.breakdown.perceptual;
  out.total = total;
  return out;
}

LossTerms discriminator_loss(const torch::Tensor& d_real_logits, const torch::Tensor& d_fake_logits,
                             const torch::Tensor& gp, const ReconTrainConfig& cfg) {
  if (d_real_logits.sizes() != d_fake_logits.sizes()) {
    throw Error(ErrorCode::kShapeMismatch, "discriminator_loss: logits shape");
  }
  LossTerms out;
  const auto d_real = bce_with_logits(d_real_logits, cfg.real_label);
  const auto d_fake = bce_with_logits(d_fake_logits, 0.0);
  out.total = d_real + d_fake + cfg.lambda_gp * gp;
  out.breakdown.d_real = d_real.item<double>();
  out.breakdown.d_fake = d_fake.item<double>();
  out.breakdown.gp = gp.item<double>();
  out.breakdown.d_total = out.breakdown.d_real + out.breakdown.d_fake + cfg.lambda_gp * out.breakdown.gp;
  return out;
}

torch::Tensor gradient_penalty(const Critic& critic, const torch::Tensor& real, const torch::Tensor& fake,
                               const std::optional<torch::Tensor>& condition,
                               const std::optional<torch::Tensor>& epsilon) {
  if (real.sizes() != fake.sizes()) throw Error(ErrorCode::kShapeMismatch, "gradient_penalty: pair shapes");
  const auto batch = real.size(0);
  std::vector<std::int64_t> eps_shape(real.dim(), 1);
  eps_shape[0] = batch;
  const auto eps = epsilon ? epsilon->to(real.options()).reshape(eps_shape) : torch::rand(eps_shape, real.options());
  auto x_hat = (eps * real.detach() + (1.0 - eps) * fake.detach()).requires_grad_(true);
  const auto input = condition ? torch::cat({condition->detach(), x_hat}, 1) : x_hat;
  const auto out = critic(input);

  torch::Tensor grad;
  if (out.requires_grad()) {
    grad = torch::autograd::grad({out.sum()}, {x_hat}, {}, /*retain_graph=*/true, /*create_graph=*/true,
                                 /*allow_unused=*/true)[0];
  }
  if (!grad.defined()) grad = torch::zeros_like(x_hat);
  const auto norm = grad.reshape({batch, -1}).norm(2, 1);
  return (norm - 1.0).pow(2).mean();
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

torch::Tensor to_generator_range(const torch::Tensor& t, Modality modality) {
  return modality == Modality::kMRI ? t * 2.0 - 1.0 : t;
}

torch::Tensor from_generator_range(const torch::Tensor& t, Modality modality) {
  return modality == Modality::kMRI ? (t + 1.0) * 0.5 : t;
}

namespace {

void accumulate(LossBreakdown& acc, const LossBreakdown& g, const LossBreakdown& d) {
  acc.adversarial += g.adversarial;
  acc.l1 += g.l1;
  acc.perceptual += g.perceptual;
  acc.total += g.total;
  acc.d_real += d.d_real;
  acc.d_fake += d.d_fake;
  acc.gp += d.gp;
  acc.d_total += d.d_total;
}

LossBreakdown scaled(LossBreakdown b, double s) {
  b.adversarial *= s;
  b.l1 *= s;
  b.perceptual *= s;
  b.total *= s;
  b.d_real *= s;
  b.d_fake *= s;
  b.gp *= s;
  b.d_total *= s;
  return b;
}

bool finite(const LossBreakdown& b) {
  for (double v : {b.adversarial, b.l1, b.perceptual, b.total, b.d_real, b.d_fake, b.gp, b.d_total}) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void dump_batch(const std::filesystem::path& dir, std::size_t batch_id, const torch::Tensor& edges,
                const torch::Tensor& real, const torch::Tensor& fake) {
  if (dir.empty()) return;
  std::filesystem::create_directories(dir);
  archive::Archive a;
  a.kind = "nonfinite_batch";
  a.metadata_json = nlohmann::json{{"batch_id", batch_id}}.dump();
  a.tensors = {{"edges", edges}, {"real", real}, {"fake", fake.detach()}};
  archive::write_file(dir / ("nonfinite_batch_" + std::to_string(batch_id) + ".ckpt"), a);
}

std::pair<double, double> validation_l1(const ReconCheckpoint& ckpt,
                                        const std::vector<std::shared_ptr<const Image2D>>& images) {
  if (images.empty()) return {0.0, 0.0};
  std::vector<double> errors;
  for (const auto& img : images) {
    const Image2D rec = reconstruct(*img, ckpt);
    double sum = 0.0;
    for (std::size_t i = 0; i < rec.pixels.size(); ++i) sum += std::abs(rec.pixels[i] - img->pixels[i]);
    errors.push_back(sum / static_cast<double>(rec.pixels.size()));
  }
  const double mean = std::accumulate(errors.begin(), errors.end(), 0.0) / errors.size();
  double var = 0.0;
  for (double e : errors) var += (e - mean) * (e - mean);
  var = errors.size() > 1 ? var / (errors.size() - 1) : 0.0;
  return {mean, std::sqrt(var)};
}

}  // namespace

ReconCheckpoint train_reconstructor(const std::vector<augment::TrainingPair>& pairs,
                                    const ReconTrainOptions& options) {
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "train_reconstructor: empty dataset");
  const auto& cfg = options.config;
  validate(cfg);
  if (cfg.use_perceptual && !options.extractor) {
    throw Error(ErrorCode::kConfig,
                "train_reconstructor: perceptual loss enabled but no feature extractor was supplied");
  }
  const int size = pairs.front().edges.rows();
  const Modality modality = pairs.front().target->modality;
  for (const auto& p : pairs) {
    if (p.edges.rows() != size || p.edges.cols() != size || p.target->pixels.rows() != size) {
      throw Error(ErrorCode::kShapeMismatch, "train_reconstructor: pairs must share one square size");
    }
  }

  seed_torch(cfg.seed);
  ReconCheckpoint ckpt;
  ckpt.generator_spec = options.generator_spec;
  ckpt.discriminator_spec = options.discriminator_spec;
  ckpt.config = cfg;
  ckpt.modality = modality;
  ckpt.image_size = size;
  ckpt.canny = options.canny;
  ckpt.generator = build_generator(options.generator_spec);
  ckpt.discriminator = build_discriminator(options.discriminator_spec);
  auto& gen = ckpt.generator;
  auto& disc = ckpt.discriminator;
  gen->to(options.device);
  disc->to(options.device);

  const auto adam = torch::optim::AdamOptions(cfg.lr).betas({cfg.beta1, cfg.beta2});
  torch::optim::Adam opt_g(gen->parameters(), adam);
  torch::optim::Adam opt_d(disc->parameters(), adam);
  const FeatureExtractor* extractor = options.extractor ? &options.extractor : nullptr;
  const Critic critic = [&disc](const torch::Tensor& x) { return disc->forward(x); };

  Rng rng = derive_rng(cfg.seed, 0x5245434fULL);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<const RealGrid*> targets;
  std::vector<RealGrid> edge_grids;
  bool first = true;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    gen->train();
    disc->train();
    std::shuffle(order.begin(), order.end(), rng);
    LossBreakdown acc;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      targets.clear();
      edge_grids.clear();
      for (std::size_t k = start; k < end; ++k) {
        const auto& pair = pairs[order[k]];
        RealGrid e(size, size);
        for (std::size_t i = 0; i < e.size(); ++i) e[i] = pair.edges.pixels[i];
        edge_grids.push_back(std::move(e));
        targets.push_back(&pair.target->pixels);
      }
      std::vector<const RealGrid*> edge_ptrs;
      for (const auto& e : edge_grids) edge_ptrs.push_back(&e);
      const auto edges = stack_grids(edge_ptrs).to(options.device);
      const auto real = to_generator_range(stack_grids(targets), modality).to(options.device);

      const auto fake = gen->forward(edges);
      const auto d_real = disc->forward(torch::cat({edges, real}, 1));
      const auto d_fake = disc->forward(torch::cat({edges, fake.detach()}, 1));
      const auto gp = gradient_penalty(critic, real, fake, edges);
      const auto d_terms = discriminator_loss(d_real, d_fake, gp, cfg);
      opt_d.zero_grad();
      d_terms.total.backward();
      opt_d.step();

      const auto d_fake_for_g = disc->forward(torch::cat({edges, fake}, 1));
      auto g_terms = generator_loss(fake, real, d_fake_for_g, extractor, cfg);
      LossBreakdown step = g_terms.breakdown;
      step.d_real = d_terms.breakdown.d_real;
      step.d_fake = d_terms.breakdown.d_fake;
      step.gp = d_terms.breakdown.gp;
      step.d_total = d_terms.breakdown.d_total;
      if (!finite(step)) {
        const std::size_t per_epoch = (order.size() + cfg.batch_size - 1) / cfg.batch_size;
        const std::size_t batch_id = static_cast<std::size_t>(epoch - 1) * per_epoch + batches;
        dump_batch(options.dump_dir, batch_id, edges, real, fake);
        throw Error(ErrorCode::kNonFiniteLoss, "train_reconstructor: non-finite loss at epoch " +
                                                   std::to_string(epoch) + ", batch id " +
                                                   std::to_string(batch_id));
      }
      opt_g.zero_grad();
      g_terms.total.backward();
      opt_g.step();

      if (first) {
        ckpt.first_step = step;
        first = false;
      }
      accumulate(acc, step, step);
      ++batches;
    }
    EpochLog log;
    log.epoch = epoch;
    log.mean = scaled(acc, 1.0 / static_cast<double>(std::max<std::size_t>(batches, 1)));
    gen->eval();
    disc->eval();
    std::tie(log.val_l1_mean, log.val_l1_std) = validation_l1(ckpt, options.validation);
    ckpt.log.push_back(log);
    if (options.on_epoch) options.on_epoch(log);
  }
  gen->eval();
  disc->eval();
  gen->to(torch::kCPU);
  disc->to(torch::kCPU);
  return ckpt;
}

// ---------------------------------------------------------------------------
// Checkpoint
// ---------------------------------------------------------------------------

void save_checkpoint(const ReconCheckpoint& ckpt, const std::filesystem::path& path) {
  if (!ckpt.generator || !ckpt.discriminator) {
    throw Error(ErrorCode::kCheckpoint, "save_checkpoint: checkpoint has no models");
  }
  archive::Archive a;
  a.kind = "recon_gan";
  a.metadata_json = detail::recon_metadata(ckpt).dump();
  a.tensors = archive::module_state(*ckpt.generator, "generator.");
  auto d = archive::module_state(*ckpt.discriminator, "discriminator.");
  a.tensors.insert(a.tensors.end(), d.begin(), d.end());
  archive::write_file(path, a);
}

ReconCheckpoint load_checkpoint(const std::filesystem::path& path) {
  const auto a = archive::read_file(path);
  if (a.kind != "recon_gan") {
    throw Error(ErrorCode::kCheckpoint, path.string() + " is not a reconstructor checkpoint");
  }
  ReconCheckpoint ckpt = detail::recon_from_metadata(nlohmann::json::parse(a.metadata_json));
  ckpt.generator = Generator(ckpt.generator_spec);
  ckpt.discriminator = Discriminator(ckpt.discriminator_spec);
  archive::load_module_state(*ckpt.generator, a.tensors, "generator.");
  archive::load_module_state(*ckpt.discriminator, a.tensors, "discriminator.");
  ckpt.generator->eval();
  ckpt.discriminator->eval();
  return ckpt;
}

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

Image2D generate_from_edges(const EdgeMap& edges, const ReconCheckpoint& ckpt, Modality modality) {
  if (!ckpt.generator) throw Error(ErrorCode::kCheckpoint, "reconstruct: checkpoint has no generator");
  if (edges.rows() != ckpt.image_size || edges.cols() != ckpt.image_size) {
    throw Error(ErrorCode::kShapeMismatch, "reconstruct: image size " + std::to_string(edges.rows()) +
                                               " differs from training size " +
                                               std::to_string(ckpt.image_size));
  }
  torch::NoGradGuard no_grad;
  auto& gen = *ckpt.generator.ptr();
  const auto device = gen.parameters().front().device();
  const auto out = from_generator_range(gen.forward(to_tensor(edges.pixels).to(device)), modality);
  Image2D rec;
  rec.modality = modality;
  rec.pixels = to_grid(out);
  const auto range = intensity_range(modality);
  for (double& v : rec.pixels) v = std::clamp(v, range.lo, range.hi);
  return rec;
}

Image2D reconstruct(const Image2D& img, const ReconCheckpoint& ckpt) {
  if (img.pixels.rows() != ckpt.image_size || img.pixels.cols() != ckpt.image_size) {
    throw Error(ErrorCode::kShapeMismatch, "reconstruct: image size " + std::to_string(img.pixels.rows()) +
                                               " differs from training size " +
                                               std::to_string(ckpt.image_size));
  }
  return generate_from_edges(imgproc::canny_edges(img, ckpt.canny), ckpt, img.modality);
}

}  // namespace arepas::recon
