#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "arepas/edge_augment.hpp"
#include "arepas/image.hpp"
#include "arepas/imgproc.hpp"
#include "arepas/patch_siamese.hpp"
#include "arepas/recon_gan.hpp"
#include "arepas/synthdata.hpp"

namespace arepas {

inline constexpr int kConfigVersion = 1;

struct InferenceOptions {
  /// Heat-map grid stride; 0 selects patch_size / 2.
  int stride = 0;
  int batch_size = 1024;
};

struct EvalOptions {
  /// Restrict the AUPRC to foreground-mask pixels.
  bool auprc_foreground_only = true;
  int threshold_candidates = 256;
  std::vector<int> sweep_patch_sizes = {8, 12, 16, 20, 24};
};

// Every hyperparameter of a run. Serialized as JSON with a "version" field;
// unknown keys are errors. A single top-level seed drives every stage (the
// per-stage seed fields of the sub-configs are filled from it and are not
// part of the file).
struct ExperimentConfig {
  int version = kConfigVersion;
  Modality modality = Modality::kSynth;
  int image_size = 64;
  std::uint64_t seed = 0;
  imgproc::CannyOptions canny;
  augment::AugmentSpec augment;
  recon::GeneratorSpec generator;
  recon::DiscriminatorSpec discriminator;
  recon::ReconTrainConfig recon;
  /// Share of the normal training images held out to log reconstruction L1.
  double recon_validation_fraction = 0.1;
  siamese::SiameseSpec siamese;
  siamese::ScorerTrainConfig scorer;
  InferenceOptions inference;
  EvalOptions eval;
  synth::SynthConfig synth;
};

/// Copies the top-level seed into every sub-config.
void apply_seed(ExperimentConfig& cfg, std::uint64_t seed);

/// Sub-config invariants plus cross-checks (image size vs generator depth
/// and patch sizes). Throws kConfig.
void validate(const ExperimentConfig& cfg);

std::string serialize_config(const ExperimentConfig& cfg);
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg);

}  // namespace arepas
