#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

#include "arepas/grid.hpp"

namespace arepas {

enum class Modality { kCT, kMRI, kSynth };

std::string_view modality_name(Modality m);
Modality parse_modality(std::string_view name);

/// Intensity range a modality is normalized to: [-1, 1] for CT/SYNTH, [0, 1] for MRI.
struct IntensityRange {
  double lo;
  double hi;
};
IntensityRange intensity_range(Modality m);

/// A preprocessed 2D slice. Outside `mask` pixels hold the background value 0.
struct Image2D {
  RealGrid pixels;
  Modality modality = Modality::kSynth;
  std::optional<Mask> mask;

  int size() const noexcept { return pixels.rows(); }
  /// The foreground mask, or an all-ones mask when none is attached.
  Mask foreground() const;
};

/// Throws kInvalidArgument when the invariants (square, range, background) do not hold.
void validate_image(const Image2D& img);

/// Binary Canny output; always the same shape as the image it came from.
struct EdgeMap {
  Mask pixels;

  int rows() const noexcept { return pixels.rows(); }
  int cols() const noexcept { return pixels.cols(); }
  std::size_t edge_count() const { return count_nonzero(pixels); }
  bool operator==(const EdgeMap&) const = default;
};

struct IntensityStats {
  std::array<std::uint64_t, 256> histogram{};
  double otsu_threshold = 0.0;
  double p98 = 0.0;
};

using Rng = std::mt19937_64;

/// Independent stream for (seed, stream id); used for per-image generators.
Rng derive_rng(std::uint64_t seed, std::uint64_t stream);

}  // namespace arepas
