#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "arepas/image.hpp"
#include "arepas/manifest.hpp"

namespace arepas::synth {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Range&) const = default;
};

struct IntRange {
  int lo = 0;
  int hi = 0;
  bool operator==(const IntRange&) const = default;
};

struct SynthConfig {
  int image_size = 64;
  int n_normal = 200;
  int n_val = 50;
  int n_test = 50;
  /// Vessel trees per image.
  IntRange vessel_count{5, 9};
  /// Gaussian cross-section sigma of a root vessel, in pixels.
  Range vessel_width{0.7, 1.4};
  /// Peak intensity added by a root vessel above the base texture.
  Range vessel_intensity{0.5, 0.9};
  double base_level = -0.6;
  double texture_amplitude = 0.08;
  /// Per-blob area as a fraction of the image.
  Range anomaly_area_frac{0.02, 0.15};
  IntRange anomaly_blobs{1, 3};
  /// Intensity added inside each blob.
  Range anomaly_intensity_shift{0.2, 0.4};
  std::uint64_t seed = 0;
};

void validate(const SynthConfig& cfg);

/// Elliptical foreground with a smooth low-intensity texture and branching
/// random-walk vessels of Gaussian cross-section, values in [-1, 1],
/// background 0. The foreground mask is attached.
Image2D gen_normal(Rng& rng, const SynthConfig& cfg);

struct Injected {
  Image2D image;
  Mask gt;
  /// Area fraction of every blob's own mask.
  std::vector<double> blob_area_fractions;
};

/// Adds soft-edged irregular blobs lying inside the foreground, each shifting
/// the intensity by its own draw from anomaly_intensity_shift. The blob
/// count is drawn from anomaly_blobs unless given; zero leaves the image
/// untouched with an empty mask.
Injected inject_anomaly(const Image2D& img, Rng& rng, const SynthConfig& cfg,
                        std::optional<int> blob_count = std::nullopt);

/// Writes images/<id>.pfm, masks/<id>.pgm, gt/<id>.pgm and manifest.csv
/// under `out_dir`: n_normal train normals, n_val and n_test anomalous
/// images. Throws kPathCollision when any of these files already exists.
data::DatasetManifest gen_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace arepas::synth
