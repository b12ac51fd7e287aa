#include "arepas/image.hpp"

#include <cmath>
#include <string>

namespace arepas {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "E_INVALID_ARGUMENT";
    case ErrorCode::kShapeMismatch: return "E_SHAPE_MISMATCH";
    case ErrorCode::kNoForeground: return "E_NO_FOREGROUND";
    case ErrorCode::kDegenerateHistogram: return "E_DEGENERATE_HISTOGRAM";
    case ErrorCode::kNonFiniteLoss: return "E_NON_FINITE_LOSS";
    case ErrorCode::kMissingPrerequisite: return "E_MISSING_PREREQUISITE";
    case ErrorCode::kConfig: return "E_INVALID_CONFIG";
    case ErrorCode::kManifest: return "E_INVALID_MANIFEST";
    case ErrorCode::kIo: return "E_IO";
    case ErrorCode::kPathCollision: return "E_PATH_COLLISION";
    case ErrorCode::kCheckpoint: return "E_CHECKPOINT";
    case ErrorCode::kDevice: return "E_DEVICE_UNAVAILABLE";
  }
  return "E_UNKNOWN";
}

std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::kCT: return "CT";
    case Modality::kMRI: return "MRI";
    case Modality::kSynth: return "SYNTH";
  }
  return "SYNTH";
}

Modality parse_modality(std::string_view name) {
  if (name == "CT") return Modality::kCT;
  if (name == "MRI") return Modality::kMRI;
  if (name == "SYNTH") return Modality::kSynth;
  throw Error(ErrorCode::kInvalidArgument, "unknown modality '" + std::string(name) + "'");
}

IntensityRange intensity_range(Modality m) {
  return m == Modality::kMRI ? IntensityRange{0.0, 1.0} : IntensityRange{-1.0, 1.0};
}

Mask Image2D::foreground() const {
  if (mask) return *mask;
  return Mask(pixels.rows(), pixels.cols(), 1);
}

void validate_image(const Image2D& img) {
  if (img.pixels.empty()) throw Error(ErrorCode::kInvalidArgument, "empty image");
  if (!img.pixels.square()) throw Error(ErrorCode::kInvalidArgument, "image is not square");
  const auto range = intensity_range(img.modality);
  for (double v : img.pixels) {
    if (!std::isfinite(v) || v < range.lo || v > range.hi) {
      throw Error(ErrorCode::kInvalidArgument,
                  "pixel value " + std::to_string(v) + " outside modality range");
    }
  }
  if (img.mask) {
    require_same_shape(img.pixels, *img.mask, "image mask");
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
      if ((*img.mask)[i] == 0 && img.pixels[i] != 0.0) {
        throw Error(ErrorCode::kInvalidArgument, "nonzero background pixel outside mask");
      }
    }
  }
}

Rng derive_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x41524550u};
  return Rng(seq);
}

}  // namespace arepas
