#pragma once

#include <span>
#include <vector>

#include "arepas/image.hpp"

namespace arepas::infer {

/// Top-left corner of a patch.
struct Origin {
  int row = 0;
  int col = 0;
  bool operator==(const Origin&) const = default;
};

/// Scores patch pairs cut at identical origins from a real image and its
/// reconstruction. Implementations return one similarity a_k in [0, 1] per
/// origin and must be safe to call concurrently.
class PatchScorer {
 public:
  virtual ~PatchScorer() = default;
  virtual std::vector<double> score(const RealGrid& real, const RealGrid& rec,
                                    std::span<const Origin> origins, int patch_size) const = 0;
};

struct AnomalyMap {
  RealGrid pixels;    // per-pixel mean dissimilarity 1 - a_k, in [0, 1]
  Grid<int> coverage; // number of patches averaged into each pixel
};

struct FinalMap {
  RealGrid pixels;
};

/// Regular grid of origins 0, stride, 2*stride, ... up to side - patch_size.
std::vector<Origin> grid_origins(int rows, int cols, int patch_size, int stride);

/// Dissimilarity heat-map. Every patch adds 1 - a_k to all its pixels and
/// overlapping contributions are averaged. Pixels outside the covered
/// rectangle (possible when the stride does not divide side - patch_size)
/// copy the value and coverage of the nearest covered pixel.
/// `stride <= 0` selects patch_size / 2.
AnomalyMap heatmap(const Image2D& real, const Image2D& rec, const PatchScorer& scorer, int patch_size,
                   int stride = 0);

/// |I_real - I_rec| * A, zero outside the real image's foreground mask.
FinalMap final_map(const Image2D& real, const Image2D& rec, const AnomalyMap& a);

/// |I_real - I_rec| alone (the scorer-free ablation), same background rule.
FinalMap residual_map(const Image2D& real, const Image2D& rec);

/// Binary mask of pixels strictly above `t`.
Mask apply_threshold(const FinalMap& fm, double t);

}  // namespace arepas::infer
