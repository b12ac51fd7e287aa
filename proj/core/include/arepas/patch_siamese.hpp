#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <functional>
#include <vector>

#include "arepas/anomaly_infer.hpp"
#include "arepas/image.hpp"

namespace arepas::siamese {

struct SiameseSpec {
  int conv1_filters = 32;
  int conv2_filters = 64;
  int kernel = 4;
  int embedding_dim = 10;
  int patch_size = 16;
};

struct ScorerTrainConfig {
  int epochs = 50;
  int batch_size = 1024;
  /// Positive pairs drawn per image and epoch; as many negatives are drawn.
  int pairs_per_image = 64;
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  /// Share of the normal training images held out for model selection.
  double validation_fraction = 0.1;
  /// Minimum share of a patch that must lie on the foreground mask.
  double min_foreground_fraction = 0.5;
  std::uint64_t seed = 0;
};

void validate(const SiameseSpec& spec);
void validate(const ScorerTrainConfig& cfg);

enum class PatchSource { kReal, kRec };

struct Patch {
  RealGrid pixels;
  infer::Origin origin;
  PatchSource source = PatchSource::kReal;
};

/// label 1: identical origins; label 0: origins at L-inf distance >= s/2.
struct PatchPair {
  Patch real_patch;
  Patch rec_patch;
  int label = 0;
};

Patch extract_patch(const RealGrid& img, infer::Origin origin, int size, PatchSource source);

/// Origins whose patch lies inside the image and overlaps the foreground by
/// at least `min_foreground_fraction`.
std::vector<infer::Origin> valid_origins(const Image2D& img, int patch_size, double min_foreground_fraction);

/// `count` positives (same origin in both images) followed by `count`
/// negatives (independent origins at L-inf distance >= patch_size / 2), each
/// origin uniform over the valid positions. Throws when the image is smaller
/// than a patch or no valid negative placement exists.
std::vector<PatchPair> sample_patch_pairs(const Image2D& real, const Image2D& rec, int patch_size, int count,
                                          double min_foreground_fraction, Rng& rng);

/// Input batch norm, two tanh convs with 2x2 average pooling, flattened batch
/// norm, and a tanh fully connected embedding. Both branches of the Siamese
/// pair run through this one module.
class EncoderImpl : public torch::nn::Module {
 public:
  explicit EncoderImpl(const SiameseSpec& spec);
  /// [B, 1, s, s] -> [B, embedding_dim]
  torch::Tensor forward(const torch::Tensor& x);
  const SiameseSpec& spec() const { return spec_; }

 private:
  SiameseSpec spec_;
  torch::nn::BatchNorm2d input_norm_{nullptr};
  torch::nn::Conv2d conv1_{nullptr};
  torch::nn::Conv2d conv2_{nullptr};
  torch::nn::BatchNorm1d flat_norm_{nullptr};
  torch::nn::Linear head_{nullptr};
};
TORCH_MODULE(Encoder);

Encoder build_encoder(const SiameseSpec& spec);

/// a = 2 * sigmoid(-||e1 - e2||), row-wise; 1 at zero distance, -> 0 far apart.
torch::Tensor similarity_from_embeddings(const torch::Tensor& e1, const torch::Tensor& e2);

/// Embedding of one patch in evaluation mode.
std::vector<double> embed(const Patch& patch, Encoder& encoder);
double similarity(const Patch& a, const Patch& b, Encoder& encoder);

/// Scalar mapping used by `similarity`, exposed for direct checks.
double similarity_from_distance(double d);

/// mean((1 - y) a^2 + y max(0, 1 - a)^2). Throws on an empty batch.
torch::Tensor contrastive_loss(const torch::Tensor& a, const torch::Tensor& y);

struct ScorerEpochLog {
  int epoch = 0;
  double loss = 0.0;
  double val_accuracy = 0.0;
};

struct ScorerCheckpoint {
  SiameseSpec spec;
  ScorerTrainConfig config;
  std::vector<ScorerEpochLog> log;
  int best_epoch = 0;
  Encoder encoder{nullptr};
};

/// A normal training image and its reconstruction.
struct ImagePair {
  const Image2D* real = nullptr;
  const Image2D* rec = nullptr;
};

struct ScorerTrainOptions {
  SiameseSpec spec;
  ScorerTrainConfig config;
  torch::Device device = torch::kCPU;
  std::function<void(const ScorerEpochLog&)> on_epoch;
};

/// Minimizes the contrastive loss with Adam, evaluating pair accuracy
/// (predict same-location iff a > 0.5) on the held-out images after every
/// epoch and keeping the best-accuracy weights (earliest on ties).
ScorerCheckpoint train_scorer(const std::vector<ImagePair>& normals, const ScorerTrainOptions& options);

void save_checkpoint(const ScorerCheckpoint& ckpt, const std::filesystem::path& path);
ScorerCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Batched PatchScorer backed by a trained encoder.
class SiameseScorer : public infer::PatchScorer {
 public:
  explicit SiameseScorer(Encoder encoder, int batch_size = 1024);
  std::vector<double> score(const RealGrid& real, const RealGrid& rec, std::span<const infer::Origin> origins,
                            int patch_size) const override;

 private:
  Encoder encoder_;
  int batch_size_;
};

}  // namespace arepas::siamese
