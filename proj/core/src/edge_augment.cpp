#include "arepas/edge_augment.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace arepas::augment {

namespace {

constexpr int kMaxShapeRetries = 100;
constexpr int kMaxPlacementDraws = 50;
constexpr int kMaxSwapShapeDraws = 20;

bool area_accepted(double frac, const AugmentSpec& spec) {
  if (spec.min_area_frac == spec.max_area_frac) {
    return std::abs(frac - spec.min_area_frac) <= kPinnedAreaTolerance;
  }
  return frac >= spec.min_area_frac && frac <= spec.max_area_frac;
}

Mask threshold_top(const RealGrid& field, double level) {
  Mask m(field.rows(), field.cols());
  for (std::size_t i = 0; i < field.size(); ++i) m[i] = field[i] >= level;
  return m;
}

std::size_t largest_component_area(const Mask& m) {
  const auto sizes = imgproc::label_components(m).second;
  return sizes.empty() ? 0 : *std::max_element(sizes.begin(), sizes.end());
}

}  // namespace

void validate(const AugmentSpec& spec) {
  if (!(spec.min_area_frac > 0.0) || spec.min_area_frac > spec.max_area_frac ||
      spec.max_area_frac > 1.0) {
    throw Error(ErrorCode::kConfig, "augment: need 0 < min_area_frac <= max_area_frac <= 1");
  }
  if (spec.max_copy_paste_ops < 0 || spec.max_augmentations_per_image < 0) {
    throw Error(ErrorCode::kConfig, "augment: operation counts must be non-negative");
  }
  if (spec.blur_sigma < 0.0) throw Error(ErrorCode::kConfig, "augment: negative blur_sigma");
}

RegionShape sample_region_shape(Rng& rng, int image_size, const AugmentSpec& spec) {
  if (image_size < 8) throw Error(ErrorCode::kInvalidArgument, "region shape: image_size < 8");
  validate(spec);
  const auto n = static_cast<std::size_t>(image_size) * image_size;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> area(spec.min_area_frac, spec.max_area_frac);

  for (int attempt = 0; attempt < kMaxShapeRetries; ++attempt) {
    const double target_frac = spec.min_area_frac == spec.max_area_frac ? spec.min_area_frac : area(rng);
    const double target_px = target_frac * static_cast<double>(n);

    RealGrid noise(image_size, image_size);
    for (double& v : noise) v = unit(rng);
    const RealGrid field = imgproc::gaussian_blur(noise, spec.blur_sigma);
    std::vector<double> levels(field.begin(), field.end());
    std::sort(levels.begin(), levels.end(), std::greater<>());

    // The largest component of the top-k pixels grows monotonically with k.
    std::size_t lo = 1;
    std::size_t hi = n;
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (static_cast<double>(largest_component_area(threshold_top(field, levels[mid - 1]))) >= target_px) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }

    Mask blob = imgproc::largest_component(threshold_top(field, levels[lo - 1]));
    blob = imgproc::largest_component(imgproc::close(imgproc::open(blob)));
    const auto box = imgproc::bounding_box(blob);
    if (!box) continue;
    const double frac = static_cast<double>(count_nonzero(blob)) / static_cast<double>(n);
    if (!area_accepted(frac, spec)) continue;

    RegionShape shape;
    shape.bbox = *box;
    shape.area_fraction = frac;
    shape.mask = Mask(box->height, box->width);
    for (int r = 0; r < box->height; ++r) {
      for (int c = 0; c < box->width; ++c) shape.mask(r, c) = blob(box->row + r, box->col + c);
    }
    return shape;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "region shape: no acceptable region after " + std::to_string(kMaxShapeRetries) + " draws");
}

bool placements_overlap(const Mask& region, Placement a, Placement b) {
  const int dr = b.row - a.row;
  const int dc = b.col - a.col;
  if (std::abs(dr) >= region.rows() || std::abs(dc) >= region.cols()) return false;
  for (int r = 0; r < region.rows(); ++r) {
    for (int c = 0; c < region.cols(); ++c) {
      if (region(r, c) && region.contains(r + dr, c + dc) && region(r + dr, c + dc)) return true;
    }
  }
  return false;
}

EdgeMap swap_regions(const EdgeMap& edges, const Mask& region, Placement a, Placement b) {
  auto inside = [&](Placement p) {
    return p.row >= 0 && p.col >= 0 && p.row + region.rows() <= edges.rows() &&
           p.col + region.cols() <= edges.cols();
  };
  if (!inside(a) || !inside(b)) throw Error(ErrorCode::kInvalidArgument, "swap: placement outside image");
  if (a == b || placements_overlap(region, a, b)) {
    throw Error(ErrorCode::kInvalidArgument, "swap: placements overlap");
  }
  EdgeMap out = edges;
  for (int r = 0; r < region.rows(); ++r) {
    for (int c = 0; c < region.cols(); ++c) {
      if (!region(r, c)) continue;
      std::swap(out.pixels(a.row + r, a.col + c), out.pixels(b.row + r, b.col + c));
    }
  }
  return out;
}

EdgeMap copy_paste_once(const EdgeMap& edges, Rng& rng, const AugmentSpec& spec, SwapRecord* record) {
  if (!edges.pixels.square()) throw Error(ErrorCode::kInvalidArgument, "copy_paste: edge map not square");
  const int size = edges.rows();
  for (int draw = 0; draw < kMaxSwapShapeDraws; ++draw) {
    RegionShape region = sample_region_shape(rng, size, spec);
    const int h = region.mask.rows();
    const int w = region.mask.cols();
    std::uniform_int_distribution<int> row(0, size - h);
    std::uniform_int_distribution<int> col(0, size - w);
    for (int p = 0; p < kMaxPlacementDraws; ++p) {
      const Placement a{row(rng), col(rng)};
      const Placement b{row(rng), col(rng)};
      if (a == b || placements_overlap(region.mask, a, b)) continue;
      EdgeMap out = swap_regions(edges, region.mask, a, b);
      if (record) *record = SwapRecord{std::move(region), a, b};
      return out;
    }
  }
  return edges;
}

EdgeMap augment_edge_map(const EdgeMap& edges, Rng& rng, const AugmentSpec& spec) {
  if (spec.max_copy_paste_ops <= 0) return edges;
  std::uniform_int_distribution<int> ops(1, spec.max_copy_paste_ops);
  const int k = ops(rng);
  EdgeMap out = edges;
  for (int i = 0; i < k; ++i) out = copy_paste_once(out, rng, spec);
  return out;
}

std::vector<TrainingPair> build_training_pairs(std::shared_ptr<const Image2D> img,
                                               const AugmentSpec& spec,
                                               const imgproc::CannyOptions& canny, Rng& rng) {
  if (!img) throw Error(ErrorCode::kInvalidArgument, "training pairs: null image");
  validate_image(*img);
  std::vector<TrainingPair> pairs;
  pairs.push_back({imgproc::canny_edges(*img, canny), img});
  if (spec.max_augmentations_per_image <= 0) return pairs;

  std::uniform_int_distribution<int> count(1, spec.max_augmentations_per_image);
  const int n = count(rng);
  const EdgeMap clean = pairs.front().edges;
  for (int j = 0; j < n; ++j) {
    EdgeMap aug = augment_edge_map(clean, rng, spec);
    const bool duplicate = std::any_of(pairs.begin(), pairs.end(),
                                       [&](const TrainingPair& p) { return p.edges == aug; });
    if (!duplicate) pairs.push_back({std::move(aug), img});
  }
  return pairs;
}

}  // namespace arepas::augment
