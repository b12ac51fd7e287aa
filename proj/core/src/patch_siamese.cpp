#include "arepas/patch_siamese.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "arepas/archive.hpp"
#include "arepas/tensor_util.hpp"
#include "json_io.hpp"

namespace arepas::siamese {

namespace nn = torch::nn;
using infer::Origin;

void validate(const SiameseSpec& spec) {
  if (spec.conv1_filters < 1 || spec.conv2_filters < 1 || spec.kernel < 1 || spec.embedding_dim < 1) {
    throw Error(ErrorCode::kConfig, "siamese spec: filters, kernel and embedding_dim must be positive");
  }
  if (spec.patch_size < 4) throw Error(ErrorCode::kConfig, "siamese spec: patch_size must be >= 4");
}

void validate(const ScorerTrainConfig& cfg) {
  if (cfg.batch_size < 1 || cfg.epochs < 0 || cfg.pairs_per_image < 1 || !(cfg.lr > 0.0)) {
    throw Error(ErrorCode::kConfig, "scorer config: need batch_size >= 1, pairs_per_image >= 1, lr > 0");
  }
  if (cfg.validation_fraction < 0.0 || cfg.validation_fraction >= 1.0 || cfg.min_foreground_fraction < 0.0 ||
      cfg.min_foreground_fraction > 1.0) {
    throw Error(ErrorCode::kConfig, "scorer config: fractions out of range");
  }
}

// ---------------------------------------------------------------------------
// Pair sampling
// ---------------------------------------------------------------------------

Patch extract_patch(const RealGrid& img, Origin origin, int size, PatchSource source) {
  if (origin.row < 0 || origin.col < 0 || origin.row + size > img.rows() || origin.col + size > img.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "extract_patch: patch exceeds image bounds");
  }
  Patch p{RealGrid(size, size), origin, source};
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) p.pixels(r, c) = img(origin.row + r, origin.col + c);
  }
  return p;
}

std::vector<Origin> valid_origins(const Image2D& img, int patch_size, double min_foreground_fraction) {
  const int rows = img.pixels.rows();
  const int cols = img.pixels.cols();
  if (patch_size > rows || patch_size > cols) {
    throw Error(ErrorCode::kInvalidArgument, "patch size " + std::to_string(patch_size) + " exceeds image");
  }
  // Summed-area table of the foreground for O(1) patch coverage.
  const Mask fg = img.foreground();
  Grid<long> sat(rows + 1, cols + 1, 0);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) sat(r + 1, c + 1) = fg(r, c) + sat(r, c + 1) + sat(r + 1, c) - sat(r, c);
  }
  const double need = min_foreground_fraction * patch_size * patch_size;
  std::vector<Origin> out;
  for (int r = 0; r + patch_size <= rows; ++r) {
    for (int c = 0; c + patch_size <= cols; ++c) {
      const long covered = sat(r + patch_size, c + patch_size) - sat(r, c + patch_size) -
                           sat(r + patch_size, c) + sat(r, c);
      if (static_cast<double>(covered) >= need) out.push_back({r, c});
    }
  }
  return out;
}

namespace {

bool far_enough(Origin a, Origin b, int patch_size) {
  const int dist = std::max(std::abs(a.row - b.row), std::abs(a.col - b.col));
  return 2 * dist >= patch_size;
}

}  // namespace

std::vector<PatchPair> sample_patch_pairs(const Image2D& real, const Image2D& rec, int patch_size, int count,
                                          double min_foreground_fraction, Rng& rng) {
  require_same_shape(real.pixels, rec.pixels, "sample_patch_pairs");
  const auto origins = valid_origins(real, patch_size, min_foreground_fraction);
  if (origins.empty()) throw Error(ErrorCode::kInvalidArgument, "sample_patch_pairs: no valid patch origin");
  std::uniform_int_distribution<std::size_t> pick(0, origins.size() - 1);

  std::vector<PatchPair> pairs;
  pairs.reserve(2 * static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const Origin o = origins[pick(rng)];
    pairs.push_back({extract_patch(real.pixels, o, patch_size, PatchSource::kReal),
                     extract_patch(rec.pixels, o, patch_size, PatchSource::kRec), 1});
  }

  constexpr int kRejectionDraws = 64;
  constexpr int kAnchorDraws = 100;
  for (int i = 0; i < count; ++i) {
    bool placed = false;
    for (int anchor = 0; anchor < kAnchorDraws && !placed; ++anchor) {
      const Origin a = origins[pick(rng)];
      std::optional<Origin> b;
      for (int k = 0; k < kRejectionDraws && !b; ++k) {
        const Origin cand = origins[pick(rng)];
        if (far_enough(a, cand, patch_size)) b = cand;
      }
      if (!b) {
        std::vector<Origin> far;
        std::copy_if(origins.begin(), origins.end(), std::back_inserter(far),
                     [&](Origin o) { return far_enough(a, o, patch_size); });
        if (far.empty()) continue;
        b = far[std::uniform_int_distribution<std::size_t>(0, far.size() - 1)(rng)];
      }
      pairs.push_back({extract_patch(real.pixels, a, patch_size, PatchSource::kReal),
                       extract_patch(rec.pixels, *b, patch_size, PatchSource::kRec), 0});
      placed = true;
    }
    if (!placed) {
      throw Error(ErrorCode::kInvalidArgument,
                  "sample_patch_pairs: no origin pair at distance >= patch_size/2 in this image");
    }
  }
  return pairs;
}

// ---------------------------------------------------------------------------
// Encoder
// ---------------------------------------------------------------------------

EncoderImpl::EncoderImpl(const SiameseSpec& spec) : spec_(spec) {
  validate(spec);
  const int pooled = spec.patch_size / 2 / 2;
  if (pooled < 1) throw Error(ErrorCode::kConfig, "siamese spec: patch too small for two poolings");
  input_norm_ = register_module("input_norm", nn::BatchNorm2d(1));
  conv1_ = register_module(
      "conv1", nn::Conv2d(nn::Conv2dOptions(1, spec.conv1_filters, spec.kernel).padding(torch::kSame)));
  conv2_ = register_module("conv2", nn::Conv2d(nn::Conv2dOptions(spec.conv1_filters, spec.conv2_filters,
                                                                 spec.kernel)
                                                   .padding(torch::kSame)));
  const int flat = spec.conv2_filters * pooled * pooled;
  flat_norm_ = register_module("flat_norm", nn::BatchNorm1d(flat));
  head_ = register_module("head", nn::Linear(flat, spec.embedding_dim));
}

torch::Tensor EncoderImpl::forward(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != 1 || x.size(2) != spec_.patch_size || x.size(3) != spec_.patch_size) {
    throw Error(ErrorCode::kShapeMismatch, "siamese encoder: expected [B, 1, " + std::to_string(spec_.patch_size) +
                                               ", " + std::to_string(spec_.patch_size) + "] input");
  }
  auto h = input_norm_->forward(x);
  h = torch::avg_pool2d(torch::tanh(conv1_->forward(h)), 2);
  h = torch::avg_pool2d(torch::tanh(conv2_->forward(h)), 2);
  h = flat_norm_->forward(h.flatten(1));
  return torch::tanh(head_->forward(h));
}

Encoder build_encoder(const SiameseSpec& spec) { return Encoder(spec); }

torch::Tensor similarity_from_embeddings(const torch::Tensor& e1, const torch::Tensor& e2) {
  const auto d = torch::linalg_vector_norm(e1 - e2, 2, {1}, false, std::nullopt);
  return 2.0 * torch::sigmoid(-d);
}

double similarity_from_distance(double d) { return 2.0 / (1.0 + std::exp(d)); }

namespace {

torch::Tensor patch_tensor(const Patch& p) { return to_tensor(p.pixels); }

torch::Device module_device(const nn::Module& m) { return m.parameters().front().device(); }

}  // namespace

std::vector<double> embed(const Patch& patch, Encoder& encoder) {
  if (patch.pixels.rows() != encoder->spec().patch_size || patch.pixels.cols() != encoder->spec().patch_size) {
    throw Error(ErrorCode::kShapeMismatch, "embed: patch size does not match the encoder");
  }
  torch::NoGradGuard no_grad;
  encoder->eval();
  const auto e = encoder->forward(patch_tensor(patch).to(module_device(*encoder))).to(torch::kCPU, torch::kFloat64);
  return std::vector<double>(e.data_ptr<double>(), e.data_ptr<double>() + e.numel());
}

double similarity(const Patch& a, const Patch& b, Encoder& encoder) {
  const auto ea = embed(a, encoder);
  const auto eb = embed(b, encoder);
  double sq = 0.0;
  for (std::size_t i = 0; i < ea.size(); ++i) sq += (ea[i] - eb[i]) * (ea[i] - eb[i]);
  return similarity_from_distance(std::sqrt(sq));
}

torch::Tensor contrastive_loss(const torch::Tensor& a, const torch::Tensor& y) {
  if (a.numel() == 0) throw Error(ErrorCode::kInvalidArgument, "contrastive_loss: empty batch");
  if (a.sizes() != y.sizes()) throw Error(ErrorCode::kShapeMismatch, "contrastive_loss: a/y shape mismatch");
  const auto y_t = y.to(a.scalar_type());
  return ((1.0 - y_t) * a.pow(2) + y_t * torch::clamp_min(1.0 - a, 0.0).pow(2)).mean();
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

struct PairBatch {
  torch::Tensor real;
  torch::Tensor rec;
  torch::Tensor labels;
};

PairBatch to_batch(const std::vector<PatchPair>& pairs, std::span<const std::size_t> idx, int s) {
  const auto n = static_cast<long>(idx.size());
  PairBatch b{torch::empty({n, 1, s, s}), torch::empty({n, 1, s, s}), torch::empty({n})};
  float* real = b.real.data_ptr<float>();
  float* rec = b.rec.data_ptr<float>();
  float* y = b.labels.data_ptr<float>();
  for (const std::size_t i : idx) {
    for (double v : pairs[i].real_patch.pixels) *real++ = static_cast<float>(v);
    for (double v : pairs[i].rec_patch.pixels) *rec++ = static_cast<float>(v);
    *y++ = static_cast<float>(pairs[i].label);
  }
  return b;
}

double pair_accuracy(Encoder& encoder, const std::vector<PatchPair>& pairs, int s, torch::Device device) {
  if (pairs.empty()) return 0.0;
  torch::NoGradGuard no_grad;
  encoder->eval();
  std::vector<std::size_t> idx(pairs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::size_t correct = 0;
  constexpr std::size_t kChunk = 2048;
  for (std::size_t start = 0; start < idx.size(); start += kChunk) {
    const std::size_t end = std::min(idx.size(), start + kChunk);
    auto b = to_batch(pairs, std::span(idx).subspan(start, end - start), s);
    const auto a = similarity_from_embeddings(encoder->forward(b.real.to(device)), encoder->forward(b.rec.to(device)))
                       .to(torch::kCPU);
    const auto predicted = (a > 0.5).to(torch::kFloat32);
    correct += static_cast<std::size_t>((predicted == b.labels).sum().item<long>());
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

}  // namespace

ScorerCheckpoint train_scorer(const std::vector<ImagePair>& normals, const ScorerTrainOptions& options) {
  const auto& spec = options.spec;
  const auto& cfg = options.config;
  validate(spec);
  validate(cfg);
  if (normals.empty()) throw Error(ErrorCode::kInvalidArgument, "train_scorer: no normal images");
  for (const auto& p : normals) {
    if (!p.real || !p.rec) throw Error(ErrorCode::kInvalidArgument, "train_scorer: null image pair");
    require_same_shape(p.real->pixels, p.rec->pixels, "train_scorer");
  }

  seed_torch(cfg.seed);
  const int s = spec.patch_size;

  std::vector<std::size_t> order(normals.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng = derive_rng(cfg.seed, 0x53504c54ULL);
  std::shuffle(order.begin(), order.end(), split_rng);
  std::size_t n_val = 0;
  if (normals.size() > 1 && cfg.validation_fraction > 0.0) {
    n_val = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::lround(cfg.validation_fraction * static_cast<double>(normals.size()))), 1,
        normals.size() - 1);
  }
  const std::vector<std::size_t> val_ids(order.begin(), order.begin() + static_cast<long>(n_val));
  std::vector<std::size_t> train_ids(order.begin() + static_cast<long>(n_val), order.end());
  std::sort(train_ids.begin(), train_ids.end());

  // With a single image the training pairs double as validation pairs.
  Rng val_rng = derive_rng(cfg.seed, 0x56414cULL);
  std::vector<PatchPair> val_pairs;
  for (std::size_t id : (val_ids.empty() ? train_ids : val_ids)) {
    auto p = sample_patch_pairs(*normals[id].real, *normals[id].rec, s, cfg.pairs_per_image,
                                cfg.min_foreground_fraction, val_rng);
    std::move(p.begin(), p.end(), std::back_inserter(val_pairs));
  }

  ScorerCheckpoint ckpt;
  ckpt.spec = spec;
  ckpt.config = cfg;
  ckpt.encoder = build_encoder(spec);
  auto& encoder = ckpt.encoder;
  encoder->to(options.device);
  torch::optim::Adam opt(encoder->parameters(), torch::optim::AdamOptions(cfg.lr).betas({cfg.beta1, cfg.beta2}));

  Rng rng = derive_rng(cfg.seed, 0x545241ULL);
  std::vector<archive::NamedTensor> best_state = archive::module_state(*encoder, "");
  double best_accuracy = -1.0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<PatchPair> pairs;
    for (std::size_t id : train_ids) {
      auto p = sample_patch_pairs(*normals[id].real, *normals[id].rec, s, cfg.pairs_per_image,
                                  cfg.min_foreground_fraction, rng);
      std::move(p.begin(), p.end(), std::back_inserter(pairs));
    }
    std::vector<std::size_t> idx(pairs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);

    encoder->train();
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < idx.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(idx.size(), start + static_cast<std::size_t>(cfg.batch_size));
      auto b = to_batch(pairs, std::span(idx).subspan(start, end - start), s);
      const auto n = b.real.size(0);
      // One forward over both branches: the shared weights see the same
      // batch-norm statistics for real and reconstructed patches.
      const auto emb = encoder->forward(torch::cat({b.real, b.rec}, 0).to(options.device));
      const auto a = similarity_from_embeddings(emb.narrow(0, 0, n), emb.narrow(0, n, n));
      const auto loss = contrastive_loss(a, b.labels.to(options.device));
      const double value = loss.item<double>();
      if (!std::isfinite(value)) {
        throw Error(ErrorCode::kNonFiniteLoss, "train_scorer: non-finite loss at epoch " + std::to_string(epoch));
      }
      opt.zero_grad();
      loss.backward();
      opt.step();
      loss_sum += value * static_cast<double>(n);
    }

    ScorerEpochLog log;
    log.epoch = epoch;
    log.loss = pairs.empty() ? 0.0 : loss_sum / static_cast<double>(pairs.size());
    log.val_accuracy = pair_accuracy(encoder, val_pairs, s, options.device);
    if (log.val_accuracy > best_accuracy) {
      best_accuracy = log.val_accuracy;
      ckpt.best_epoch = epoch;
      best_state = archive::module_state(*encoder, "");
    }
    ckpt.log.push_back(log);
    if (options.on_epoch) options.on_epoch(log);
  }

  encoder->to(torch::kCPU);
  archive::load_module_state(*encoder, best_state, "");
  encoder->eval();
  return ckpt;
}

void save_checkpoint(const ScorerCheckpoint& ckpt, const std::filesystem::path& path) {
  if (!ckpt.encoder) throw Error(ErrorCode::kCheckpoint, "save_checkpoint: scorer has no encoder");
  archive::Archive a;
  a.kind = "patch_siamese";
  a.metadata_json = detail::scorer_metadata(ckpt).dump();
  a.tensors = archive::module_state(*ckpt.encoder, "encoder.");
  archive::write_file(path, a);
}

ScorerCheckpoint load_checkpoint(const std::filesystem::path& path) {
  const auto a = archive::read_file(path);
  if (a.kind != "patch_siamese") throw Error(ErrorCode::kCheckpoint, path.string() + " is not a scorer checkpoint");
  ScorerCheckpoint ckpt = detail::scorer_from_metadata(nlohmann::json::parse(a.metadata_json));
  ckpt.encoder = build_encoder(ckpt.spec);
  archive::load_module_state(*ckpt.encoder, a.tensors, "encoder.");
  ckpt.encoder->eval();
  return ckpt;
}

// ---------------------------------------------------------------------------
// Inference scorer
// ---------------------------------------------------------------------------

SiameseScorer::SiameseScorer(Encoder encoder, int batch_size) : encoder_(std::move(encoder)), batch_size_(batch_size) {
  if (!encoder_) throw Error(ErrorCode::kInvalidArgument, "SiameseScorer: null encoder");
  encoder_->eval();
}

std::vector<double> SiameseScorer::score(const RealGrid& real, const RealGrid& rec, std::span<const Origin> origins,
                                         int patch_size) const {
  require_same_shape(real, rec, "SiameseScorer::score");
  if (patch_size != encoder_->spec().patch_size) {
    throw Error(ErrorCode::kShapeMismatch, "SiameseScorer: patch size differs from the trained encoder");
  }
  torch::NoGradGuard no_grad;
  auto& enc = *encoder_.ptr();
  const auto device = module_device(enc);
  std::vector<double> out;
  out.reserve(origins.size());
  const int s = patch_size;
  for (std::size_t start = 0; start < origins.size(); start += batch_size_) {
    const std::size_t end = std::min(origins.size(), start + static_cast<std::size_t>(batch_size_));
    const auto n = static_cast<long>(end - start);
    auto a_real = torch::empty({n, 1, s, s});
    auto a_rec = torch::empty({n, 1, s, s});
    float* pr = a_real.data_ptr<float>();
    float* pc = a_rec.data_ptr<float>();
    for (std::size_t k = start; k < end; ++k) {
      const Origin o = origins[k];
      if (o.row < 0 || o.col < 0 || o.row + s > real.rows() || o.col + s > real.cols()) {
        throw Error(ErrorCode::kInvalidArgument, "SiameseScorer: origin outside image");
      }
      for (int r = 0; r < s; ++r) {
        for (int c = 0; c < s; ++c) {
          *pr++ = static_cast<float>(real(o.row + r, o.col + c));
          *pc++ = static_cast<float>(rec(o.row + r, o.col + c));
        }
      }
    }
    const auto a = similarity_from_embeddings(enc.forward(a_real.to(device)), enc.forward(a_rec.to(device)))
                       .to(torch::kCPU, torch::kFloat64);
    out.insert(out.end(), a.data_ptr<double>(), a.data_ptr<double>() + n);
  }
  return out;
}

}  // namespace arepas::siamese
