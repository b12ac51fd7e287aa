#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "arepas/image.hpp"

namespace arepas::imgproc {

// ---------------------------------------------------------------------------
// Intensity normalization
// ---------------------------------------------------------------------------

inline constexpr double kCtClipLowHu = -1000.0;
inline constexpr double kCtClipHighHu = 0.0;
inline constexpr int kDefaultOutputSize = 256;

/// Clips HU to [-1000, 0], maps linearly to [-1, 1], zeroes the background,
/// square-crops to the mask bounding box and resizes to `output_size`
/// (bilinear for the image, nearest for the mask). `output_size <= 0` skips
/// the resize. Throws kNoForeground for an empty mask.
Image2D normalize_ct(const RealGrid& hu, const Mask& lung_mask,
                     int output_size = kDefaultOutputSize);

/// Clips at the 98th percentile of the nonzero pixels, scales to [0, 1] and
/// zero-pads to a square (odd padding goes to the bottom/right). The mask is
/// the nonzero support of the input. Throws kInvalidArgument on all-zero input.
Image2D normalize_mr(const RealGrid& raw, int output_size = 0);

/// Applies the crop/pad and nearest resize of normalize_ct or normalize_mr to
/// an auxiliary mask (e.g. a ground-truth lesion mask) of the raw image.
Mask follow_ct_geometry(const Mask& aux, const Mask& lung_mask, int output_size = kDefaultOutputSize);
Mask follow_mr_geometry(const Mask& aux, int output_size = 0);

/// Linear-interpolated percentile (q in [0, 100]) of an unsorted sample.
double percentile(std::vector<double> values, double q);

/// Pads `grid` with `fill` to a square; the odd leftover row/column goes after.
template <typename T>
Grid<T> pad_to_square(const Grid<T>& grid, T fill);

// ---------------------------------------------------------------------------
// Histograms and Otsu
// ---------------------------------------------------------------------------

using Histogram = std::array<std::uint64_t, 256>;

/// 8-bit level of an intensity inside the modality range (rounded, clamped).
int quantize_level(double value, IntensityRange range);

/// 256-bin histogram of the quantized intensities where `region` is nonzero.
Histogram region_histogram(const Image2D& img, const Mask& region);

/// Level t maximizing the between-class variance of the split {<= t} / {> t}.
/// Ties resolve to the lowest t. Throws kDegenerateHistogram when fewer than
/// two bins are occupied.
int otsu_level(const Histogram& hist);

/// Otsu threshold of the foreground region in image intensity units. The
/// value sits half a level above the selected bin, so pixels above it are
/// exactly the upper class.
double otsu_threshold(const Image2D& img, const Mask& region);

IntensityStats intensity_stats(const Image2D& img, const Mask& region);

// ---------------------------------------------------------------------------
// Filtering and geometry
// ---------------------------------------------------------------------------

/// Normalized 1D Gaussian taps of radius ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian blur with reflect-101 borders. sigma <= 0 is identity.
RealGrid gaussian_blur(const RealGrid& in, double sigma);

/// Half-pixel-centre bilinear resampling with clamped borders.
RealGrid resize_bilinear(const RealGrid& in, int rows, int cols);
Mask resize_nearest(const Mask& in, int rows, int cols);

/// Reflect-101 index folding used by every border-aware filter here.
int reflect101(int i, int n);

// ---------------------------------------------------------------------------
// Binary morphology (3x3 square structuring element) and components
// ---------------------------------------------------------------------------

Mask erode(const Mask& m);
Mask dilate(const Mask& m);
Mask open(const Mask& m);
Mask close(const Mask& m);

/// Labels 4-connected components; returns the label grid (0 = background)
/// and the component sizes indexed by label - 1.
std::pair<Grid<int>, std::vector<std::size_t>> label_components(const Mask& m);

/// Keeps only the largest 4-connected component (lowest label on ties).
Mask largest_component(const Mask& m);

struct BoundingBox {
  int row = 0;
  int col = 0;
  int height = 0;
  int width = 0;
};

/// Tight box around the nonzero pixels; nullopt for an empty mask.
std::optional<BoundingBox> bounding_box(const Mask& m);

// ---------------------------------------------------------------------------
// Canny
// ---------------------------------------------------------------------------

struct CannyOptions {
  double sigma = 1.0;
  /// Both hysteresis thresholds are fractions of the Otsu threshold.
  double low_fraction = 0.66;
  double high_fraction = 0.66;
  /// Used in 8-bit gradient units when the Otsu histogram is degenerate.
  /// Without it the degenerate-histogram error propagates.
  std::optional<double> fallback_threshold;
};

/// Canny on an intensity grid already scaled to 8-bit units [0, 255].
/// Gaussian smoothing, Sobel gradients, non-maximum suppression and
/// 8-connected hysteresis with `low <= high`. The outer one-pixel ring is
/// never an edge.
EdgeMap canny(const RealGrid& scaled, double low, double high, double sigma);

/// Full edge extraction: Otsu on the foreground, thresholds at the configured
/// fractions of it, Canny on the 8-bit scaled image.
EdgeMap canny_edges(const Image2D& img, const CannyOptions& options = {});

/// Maps intensities of `img` from its modality range onto [0, 255].
RealGrid to_8bit_scale(const Image2D& img);

}  // namespace arepas::imgproc
