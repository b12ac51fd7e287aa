#include "json_io.hpp"

#include <algorithm>

namespace arepas::detail {

ObjectReader::ObjectReader(const json& j, std::string_view where) : j_(j), where_(where) {
  if (!j.is_object()) throw Error(ErrorCode::kConfig, where_ + ": expected an object");
}

const json* ObjectReader::take(const char* key) {
  seen_.emplace_back(key);
  const auto it = j_.find(key);
  return it == j_.end() ? nullptr : &*it;
}

void ObjectReader::finish() const {
  for (const auto& [key, value] : j_.items()) {
    if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
      throw Error(ErrorCode::kConfig, "unknown key " + path(key));
    }
  }
}

std::string ObjectReader::path(std::string_view key) const {
  return where_.empty() ? std::string(key) : where_ + "." + std::string(key);
}

// ---------------------------------------------------------------------------

json to_json(const imgproc::CannyOptions& v) {
  return {{"sigma", v.sigma},
          {"low_fraction", v.low_fraction},
          {"high_fraction", v.high_fraction},
          {"fallback_threshold", v.fallback_threshold ? json(*v.fallback_threshold) : json(nullptr)}};
}

void from_json(const json& j, imgproc::CannyOptions& v, std::string_view where) {
  ObjectReader r(j, where);
  r.read("sigma", v.sigma);
  r.read("low_fraction", v.low_fraction);
  r.read("high_fraction", v.high_fraction);
  r.read("fallback_threshold", v.fallback_threshold);
  r.finish();
}

json to_json(const augment::AugmentSpec& v) {
  return {{"min_area_frac", v.min_area_frac},
          {"max_area_frac", v.max_area_frac},
          {"max_copy_paste_ops", v.max_copy_paste_ops},
          {"max_augmentations_per_image", v.max_augmentations_per_image},
          {"blur_sigma", v.blur_sigma},
          {"seed", v.seed}};
}

void from_json(const json& j, augment::AugmentSpec& v, std::string_view where) {
  ObjectReader r(j, where);
  r.read("min_area_frac", v.min_area_frac);
  r.read("max_area_frac", v.max_area_frac);
  r.read("max_copy_paste_ops", v.max_copy_paste_ops);
  r.read("max_augmentations_per_image", v.max_augmentations_per_image);
  r.read("blur_sigma", v.blur_sigma);
  r.read("seed", v.seed);
  r.finish();
}

json to_json(const recon::GeneratorSpec& v) {
  return {{"in_channels", v.in_channels},         {"out_channels", v.out_channels},
          {"base_filters", v.base_filters},       {"downsample_layers", v.downsample_layers},
          {"resnet_blocks", v.resnet_blocks},     {"dropout", v.dropout}};
}

void from_json(const json& j, recon::GeneratorSpec& v, std::string_view where) {
  ObjectReader r(j, where);
  r.read("in_channels", v.in_channels);
  r.read("out_channels", v.out_channels);
  r.read("base_filters", v.base_filters);
  r.read("downsample_layers", v.downsample_layers);
  r.read("resnet_blocks", v.resnet_blocks);
  r.read("dropout", v.dropout);
  r.finish();
}

json to_json(const recon::DiscriminatorSpec& v) {
  return {{"in_channels", v.in_channels},
          {"widths", v.widths},
          {"strided_layers", v.strided_layers},
          {"kernel", v.kernel},
          {"leaky_slope", v.leaky_slope}};
}

void from_json(const json& j, recon::DiscriminatorSpec& v, std::string_view where) {
  ObjectReader r(j, where);
  r.read("in_channels", v.in_channels);
  r.read("widths", v.widths);
  r.read("strided_layers", v.strided_layers);
  r.read("kernel", v.kernel);
  r.read("leaky_slope", v.leaky_slope);
  r.finish();
}

json to_json(const recon::ReconTrainConfig& v) {
  return {{"lambda_l1", v.lambda_l1},
          {"lambda_perceptual", v.lambda_perceptual},
          {"lambda_gp", v.lambda_gp},
          {"real_label", v.real_label},
          {"lr", v.lr},
          {"beta1", v.beta1},
          {"beta2", v.beta2},
          {"batch_size", v.batch_size},
          {"epochs", v.epochs},
          {"use_perceptual", v.use_perceptual},
          {"perceptual_weights", v.perceptual_weights},
          {"seed", v.seed}};
}

void from_json(const json& j, recon::ReconTrainConfig& v, std::string_view where) {
  ObjectReader r(j, where);
  r.read("lambda_l1", v.lambda_l1);
  r.read("lambda_perceptual", v.lambda_perceptual);
  r.read("lambda_gp", v.lambda_gp);
  r.read("real_label", v.real_label);
  r.read("lr", v.lr);
  r.read("beta1", v.beta1);
  r.read("beta2", v.beta2);
  r.read("batch_size", v.batch_size);
  r.read("epochs", v.epochs);
  r.read("use_perceptual", v.use_perceptual);
  r.read("perceptual_weights", v.perceptual_weights);
  r.read("seed", v.seed);
  r.finish();
}

json to_json(const recon::LossBreakdown& v) {
  return {{"adversarial", v.adversarial}, {"l1", v.l1}, {"perceptual", v.perceptual}, {"total", v.total},
          {"d_real", v.d_real},           {"d_fake", v.d_fake}, {"gp", v.gp},           {"d_total", v.d_total}};
}

void from_json(const json& j, recon::LossBreakdown& v, std::string_view where) {
  ObjectReader r(j, where);
  r.read("adversarial", v.adversarial);
  r.read("l1", v.l1);
  r.read("perceptual", v.perceptual);
  r.read("total", v.total);
  r.read("d_real", v.d_real);
  r.read("d_fake", v.d_fake);
  r.read("gp", v.gp);
  r.read("d_total", v.d_total);
  r.finish();
}

json to_json(const siamese::SiameseSpec& v) {
  return {{"conv1_filters", v.conv1_filters},
          {"conv2_filters", v.conv2_filters},
          {"kernel", v.kernel},
          {"embedding_dim", v.embedding_dim},
          {"patch_size", v.patch_size}};
}

void from_json(const json& j, siamese::SiameseSpec& v, std::string_view where) {
  ObjectReader r(j, where);
  r.read("conv1_filters", v.conv1_filters);
  r.read("conv2_filters", v.conv2_filters);
  r.read("kernel", v.kernel);
  r.read("embedding_dim", v.embedding_dim);
  r.read("patch_size", v.patch_size);
  r.finish();
}

json to_json(const siamese::ScorerTrainConfig& v) {
  return {{"epochs", v.epochs},
          {"batch_size", v.batch_size},
          {"pairs_per_image", v.pairs_per_image},
          {"lr", v.lr},
          {"beta1", v.beta1},
          {"beta2", v.beta2},
          {"validation_fraction", v.validation_fraction},
          {"min_foreground_fraction", v.min_foreground_fraction},
          {"seed", v.seed}};
}

void from_json(const json& j, siamese::ScorerTrainConfig& v, std::string_view where) {
  ObjectReader r(j, where);
  r.read("epochs", v.epochs);
  r.read("batch_size", v.batch_size);
  r.read("pairs_per_image", v.pairs_per_image);
  r.read("lr", v.lr);
  r.read("beta1", v.beta1);
  r.read("beta2", v.beta2);
  r.read("validation_fraction", v.validation_fraction);
  r.read("min_foreground_fraction", v.min_foreground_fraction);
  r.read("seed", v.seed);
  r.finish();
}

// ---------------------------------------------------------------------------
// Checkpoint metadata

namespace {

template <typename T>
void read_object(ObjectReader& r, const char* key, T& out) {
  if (const json* v = r.take(key)) from_json(*v, out, r.path(key));
}

}  // namespace

json recon_metadata(const recon::ReconCheckpoint& ckpt) {
  json log = json::array();
  for (const auto& e : ckpt.log) {
    log.push_back({{"epoch", e.epoch},
                   {"mean", to_json(e.mean)},
                   {"val_l1_mean", e.val_l1_mean},
                   {"val_l1_std", e.val_l1_std}});
  }
  return {{"generator_spec", to_json(ckpt.generator_spec)},
          {"discriminator_spec", to_json(ckpt.discriminator_spec)},
          {"config", to_json(ckpt.config)},
          {"modality", std::string(modality_name(ckpt.modality))},
          {"image_size", ckpt.image_size},
          {"canny", to_json(ckpt.canny)},
          {"log", log},
          {"first_step", to_json(ckpt.first_step)}};
}

recon::ReconCheckpoint recon_from_metadata(const json& j) {
  recon::ReconCheckpoint ckpt;
  ObjectReader r(j, "recon checkpoint");
  read_object(r, "generator_spec", ckpt.generator_spec);
  read_object(r, "discriminator_spec", ckpt.discriminator_spec);
  read_object(r, "config", ckpt.config);
  std::string modality = std::string(modality_name(ckpt.modality));
  r.read("modality", modality);
  ckpt.modality = parse_modality(modality);
  r.read("image_size", ckpt.image_size);
  read_object(r, "canny", ckpt.canny);
  read_object(r, "first_step", ckpt.first_step);
  if (const json* log = r.take("log")) {
    if (!log->is_array()) throw Error(ErrorCode::kConfig, "recon checkpoint.log: expected an array");
    for (const auto& e : *log) {
      recon::EpochLog entry;
      ObjectReader er(e, "recon checkpoint.log[]");
      er.read("epoch", entry.epoch);
      read_object(er, "mean", entry.mean);
      er.read("val_l1_mean", entry.val_l1_mean);
      er.read("val_l1_std", entry.val_l1_std);
      er.finish();
      ckpt.log.push_back(entry);
    }
  }
  r.finish();
  return ckpt;
}

json scorer_metadata(const siamese::ScorerCheckpoint& ckpt) {
  json log = json::array();
  for (const auto& e : ckpt.log) {
    log.push_back({{"epoch", e.epoch}, {"loss", e.loss}, {"val_accuracy", e.val_accuracy}});
  }
  return {{"spec", to_json(ckpt.spec)},
          {"config", to_json(ckpt.config)},
          {"log", log},
          {"best_epoch", ckpt.best_epoch}};
}

siamese::ScorerCheckpoint scorer_from_metadata(const json& j) {
  siamese::ScorerCheckpoint ckpt;
  ObjectReader r(j, "scorer checkpoint");
  read_object(r, "spec", ckpt.spec);
  read_object(r, "config", ckpt.config);
  r.read("best_epoch", ckpt.best_epoch);
  if (const json* log = r.take("log")) {
    if (!log->is_array()) throw Error(ErrorCode::kConfig, "scorer checkpoint.log: expected an array");
    for (const auto& e : *log) {
      siamese::ScorerEpochLog entry;
      ObjectReader er(e, "scorer checkpoint.log[]");
      er.read("epoch", entry.epoch);
      er.read("loss", entry.loss);
      er.read("val_accuracy", entry.val_accuracy);
      er.finish();
      ckpt.log.push_back(entry);
    }
  }
  r.finish();
  return ckpt;
}

}  // namespace arepas::detail
