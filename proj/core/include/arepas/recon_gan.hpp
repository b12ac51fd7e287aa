#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "arepas/edge_augment.hpp"
#include "arepas/image.hpp"
#include "arepas/imgproc.hpp"

namespace arepas::recon {

// ---------------------------------------------------------------------------
// Architecture
// ---------------------------------------------------------------------------

struct GeneratorSpec {
  int in_channels = 1;
  int out_channels = 1;
  /// Filters of the first 7x7 stage; doubled by every downsampling layer.
  int base_filters = 64;
  int downsample_layers = 2;
  int resnet_blocks = 9;
  double dropout = 0.5;
};

struct DiscriminatorSpec {
  int in_channels = 2;
  /// Output filters of each spectral-normalized conv; the last must be 1.
  std::vector<int> widths = {64, 128, 256, 512, 1};
  /// Leading layers that downsample with stride 2; the rest use stride 1.
  int strided_layers = 3;
  int kernel = 4;
  double leaky_slope = 0.2;
};

void validate(const GeneratorSpec& spec);
void validate(const DiscriminatorSpec& spec);

/// Conv2d whose weight is divided by its largest singular value, estimated
/// with one power iteration per training-mode forward pass.
class SpectralConv2dImpl : public torch::nn::Module {
 public:
  SpectralConv2dImpl(int in_channels, int out_channels, int kernel, int stride, int padding);
  torch::Tensor forward(const torch::Tensor& x);
  /// Current normalized weight (uses the stored singular vectors).
  torch::Tensor normalized_weight();

 private:
  int stride_;
  int padding_;
  torch::Tensor weight_;
  torch::Tensor bias_;
  torch::Tensor u_;
  torch::Tensor v_;
};
TORCH_MODULE(SpectralConv2d);

class ResnetBlockImpl : public torch::nn::Module {
 public:
  ResnetBlockImpl(int channels, double dropout);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential body_;
};
TORCH_MODULE(ResnetBlock);

/// Encoder / residual / decoder translator from an edge map to an image in
/// [-1, 1] (tanh output). Spatial size is preserved; the side must be
/// divisible by 2^downsample_layers.
class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(const GeneratorSpec& spec);
  torch::Tensor forward(const torch::Tensor& x);
  const GeneratorSpec& spec() const { return spec_; }

 private:
  GeneratorSpec spec_;
  torch::nn::Sequential net_;
};
TORCH_MODULE(Generator);

/// Patch discriminator on channel-concatenated (edge, image) pairs; returns
/// a grid of patch logits.
class DiscriminatorImpl : public torch::nn::Module {
 public:
  explicit DiscriminatorImpl(const DiscriminatorSpec& spec);
  torch::Tensor forward(const torch::Tensor& x);
  const DiscriminatorSpec& spec() const { return spec_; }

 private:
  DiscriminatorSpec spec_;
  std::vector<SpectralConv2d> convs_;
};
TORCH_MODULE(Discriminator);

/// Builds a generator initialized with N(0, 0.02) conv weights. Equal specs
/// and seeds give identical weights.
Generator build_generator(const GeneratorSpec& spec);
Discriminator build_discriminator(const DiscriminatorSpec& spec);

std::int64_t parameter_count(const torch::nn::Module& module);

// ---------------------------------------------------------------------------
// Perceptual features
// ---------------------------------------------------------------------------

/// Maps a [B, 1, H, W] batch in [-1, 1] to a feature tensor. Must be frozen.
using FeatureExtractor = std::function<torch::Tensor(const torch::Tensor&)>;

/// VGG-19 convolutional trunk up to block3_conv3 (after its ReLU). Weights
/// come from an archive written by tools/export_vgg19_features.py.
class Vgg19Block3Impl : public torch::nn::Module {
 public:
  Vgg19Block3Impl();
  /// Replicates the single channel to RGB and applies ImageNet normalization.
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential trunk_;
};
TORCH_MODULE(Vgg19Block3);

/// Loads frozen VGG weights and wraps the module as a FeatureExtractor.
FeatureExtractor load_vgg19_extractor(const std::filesystem::path& weights);

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

struct ReconTrainConfig {
  double lambda_l1 = 100.0;
  double lambda_perceptual = 1.0;
  double lambda_gp = 1.0;
  double real_label = 0.9;
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int batch_size = 1;
  int epochs = 10;
  bool use_perceptual = true;
  std::string perceptual_weights;
  std::uint64_t seed = 0;
};

void validate(const ReconTrainConfig& cfg);

struct LossBreakdown {
  // generator side; total == adversarial + lambda_l1*l1 + lambda_perceptual*perceptual
  double adversarial = 0.0;
  double l1 = 0.0;
  double perceptual = 0.0;
  double total = 0.0;
  // discriminator side; d_total == d_real + d_fake + lambda_gp*gp
  double d_real = 0.0;
  double d_fake = 0.0;
  double gp = 0.0;
  double d_total = 0.0;
};

struct LossTerms {
  torch::Tensor total;  // differentiable
  LossBreakdown breakdown;
};

/// Mean binary cross-entropy of `logits` against a constant target.
torch::Tensor bce_with_logits(const torch::Tensor& logits, double target);

/// Adversarial BCE (target 1), mean L1, and MSE between extractor features
/// of fake and real. The perceptual term is zero when `extractor` is null or
/// disabled in `cfg`.
LossTerms generator_loss(const torch::Tensor& fake, const torch::Tensor& real,
                         const torch::Tensor& d_fake_logits, const FeatureExtractor* extractor,
                         const ReconTrainConfig& cfg);

/// BCE(real logits, real_label) + BCE(fake logits, 0) + lambda_gp * gp.
LossTerms discriminator_loss(const torch::Tensor& d_real_logits, const torch::Tensor& d_fake_logits,
                             const torch::Tensor& gp, const ReconTrainConfig& cfg);

using Critic = std::function<torch::Tensor(const torch::Tensor&)>;

/// (||grad_x D(x_hat)||_2 - 1)^2 averaged over the batch, with
/// x_hat = eps*real + (1-eps)*fake and eps ~ U(0,1) per sample. When
/// `condition` is given the critic sees cat(condition, x_hat) along the
/// channel axis and only x_hat is differentiated. The result stays
/// differentiable with respect to the critic's parameters.
torch::Tensor gradient_penalty(const Critic& critic, const torch::Tensor& real,
                               const torch::Tensor& fake,
                               const std::optional<torch::Tensor>& condition = std::nullopt,
                               const std::optional<torch::Tensor>& epsilon = std::nullopt);

// ---------------------------------------------------------------------------
// Training / checkpoint / inference
// ---------------------------------------------------------------------------

struct EpochLog {
  int epoch = 0;
  LossBreakdown mean;
  double val_l1_mean = 0.0;
  double val_l1_std = 0.0;
};

struct ReconCheckpoint {
  GeneratorSpec generator_spec;
  DiscriminatorSpec discriminator_spec;
  ReconTrainConfig config;
  Modality modality = Modality::kSynth;
  int image_size = 0;
  imgproc::CannyOptions canny;
  std::vector<EpochLog> log;
  LossBreakdown first_step;
  Generator generator{nullptr};
  Discriminator discriminator{nullptr};
};

struct ReconTrainOptions {
  GeneratorSpec generator_spec;
  DiscriminatorSpec discriminator_spec;
  ReconTrainConfig config;
  imgproc::CannyOptions canny;
  torch::Device device = torch::kCPU;
  /// Required when config.use_perceptual is set.
  FeatureExtractor extractor;
  /// Held-out normal images; their reconstruction L1 is logged per epoch.
  std::vector<std::shared_ptr<const Image2D>> validation;
  /// Where a failing batch is written when a loss turns non-finite.
  std::filesystem::path dump_dir;
  std::function<void(const EpochLog&)> on_epoch;
};

/// Alternating discriminator/generator Adam updates over `pairs`. Throws
/// kNonFiniteLoss (after dumping the batch) when any loss is not finite.
ReconCheckpoint train_reconstructor(const std::vector<augment::TrainingPair>& pairs,
                                    const ReconTrainOptions& options);

void save_checkpoint(const ReconCheckpoint& ckpt, const std::filesystem::path& path);
ReconCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Generator output for an edge map, mapped back to the image's modality
/// range. Runs in evaluation mode without gradients.
Image2D generate_from_edges(const EdgeMap& edges, const ReconCheckpoint& ckpt, Modality modality);

/// I_rec = N_rec(canny(I_real)). Rejects images whose size differs from the
/// training size.
Image2D reconstruct(const Image2D& img, const ReconCheckpoint& ckpt);

/// Maps modality intensities onto the generator's [-1, 1] domain and back.
torch::Tensor to_generator_range(const torch::Tensor& t, Modality modality);
torch::Tensor from_generator_range(const torch::Tensor& t, Modality modality);

}  // namespace arepas::recon
