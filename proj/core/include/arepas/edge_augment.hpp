#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "arepas/image.hpp"
#include "arepas/imgproc.hpp"

namespace arepas::augment {

struct AugmentSpec {
  double min_area_frac = 0.01;
  double max_area_frac = 0.33;
  /// 0 disables augmentation entirely (identity), useful for debugging.
  int max_copy_paste_ops = 10;
  int max_augmentations_per_image = 20;
  /// Smoothing of the noise field the region shapes are cut from, in pixels.
  double blur_sigma = 4.0;
  std::uint64_t seed = 0;
};

/// Throws kConfig unless 0 < min <= max <= 1 and the counts are non-negative.
void validate(const AugmentSpec& spec);

/// Absolute band accepted around a pinned (min == max) area fraction.
inline constexpr double kPinnedAreaTolerance = 0.02;

/// Irregular single-component blob, stored cropped to its bounding box.
/// `bbox` locates the crop on the image-sized canvas it was drawn on.
struct RegionShape {
  Mask mask;
  imgproc::BoundingBox bbox;
  double area_fraction = 0.0;
};

/// Blurred uniform noise thresholded at the level whose largest 4-connected
/// component reaches a uniformly drawn target area, then smoothed by one
/// open-close pass. Retries degenerate draws up to 100 times before throwing.
RegionShape sample_region_shape(Rng& rng, int image_size, const AugmentSpec& spec);

struct Placement {
  int row = 0;
  int col = 0;
  bool operator==(const Placement&) const = default;
};

struct SwapRecord {
  RegionShape region;
  Placement first;
  Placement second;
};

/// Exchanges the edge content under `region` placed at `a` with the content
/// under it placed at `b`. The two placements must not overlap and must lie
/// fully inside the map. Applying the same swap twice restores the input.
EdgeMap swap_regions(const EdgeMap& edges, const Mask& region, Placement a, Placement b);

/// True when the region at `a` and at `b` share at least one pixel.
bool placements_overlap(const Mask& region, Placement a, Placement b);

/// One random swap of two distinct, non-overlapping placements of a freshly
/// sampled region. If no such placement pair is found after repeated draws
/// the input comes back unchanged and `record` is left untouched.
EdgeMap copy_paste_once(const EdgeMap& edges, Rng& rng, const AugmentSpec& spec,
                        SwapRecord* record = nullptr);

/// Applies k ~ Uniform{1..max_copy_paste_ops} swaps in sequence.
EdgeMap augment_edge_map(const EdgeMap& edges, Rng& rng, const AugmentSpec& spec);

struct TrainingPair {
  EdgeMap edges;
  std::shared_ptr<const Image2D> target;
};

/// The clean Canny map paired with `img`, followed by up to
/// max_augmentations_per_image augmented maps of it. Augmented maps identical
/// to one already in the list are dropped.
std::vector<TrainingPair> build_training_pairs(std::shared_ptr<const Image2D> img,
                                               const AugmentSpec& spec,
                                               const imgproc::CannyOptions& canny, Rng& rng);

}  // namespace arepas::augment
