#include <gtest/gtest.h>

#include "arepas/edge_augment.hpp"
#include "arepas/synthdata.hpp"
#include "test_util.hpp"

using namespace arepas;
using namespace arepas::augment;

namespace {

EdgeMap random_edges(std::mt19937_64& rng, int n, double p) { return EdgeMap{testing_util::random_mask(rng, n, n, p)}; }

}  // namespace

TEST(RegionShape, AreaWithinBoundsAndSingleComponent) {
  AugmentSpec spec;
  Rng rng(1);
  for (int i = 0; i < 300; ++i) {
    const auto shape = sample_region_shape(rng, 64, spec);
    EXPECT_GE(shape.area_fraction, spec.min_area_frac);
    EXPECT_LE(shape.area_fraction, spec.max_area_frac);
    EXPECT_DOUBLE_EQ(shape.area_fraction, double(count_nonzero(shape.mask)) / (64.0 * 64.0));
    EXPECT_EQ(imgproc::label_components(shape.mask).second.size(), 1u);
    const auto box = imgproc::bounding_box(shape.mask);
    ASSERT_TRUE(box);
    EXPECT_EQ(box->height, shape.mask.rows());
    EXPECT_EQ(box->width, shape.mask.cols());
    EXPECT_LE(shape.bbox.row + shape.bbox.height, 64);
  }
}

TEST(RegionShape, PinnedTargetWithinTolerance) {
  AugmentSpec spec;
  spec.min_area_frac = spec.max_area_frac = 0.10;
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    EXPECT_NEAR(sample_region_shape(rng, 64, spec).area_fraction, 0.10, kPinnedAreaTolerance);
  }
}

TEST(RegionShape, InvalidSpecRejected) {
  Rng rng(0);
  AugmentSpec bad;
  bad.min_area_frac = 0.5;
  bad.max_area_frac = 0.2;
  EXPECT_THROW(sample_region_shape(rng, 64, bad), Error);
  EXPECT_THROW(validate(bad), Error);
}

TEST(Swap, ZeroMapStaysZero) {
  Rng rng(3);
  const EdgeMap zero{Mask(64, 64, 0)};
  EXPECT_EQ(augment_edge_map(zero, rng, AugmentSpec{}), zero);
}

TEST(Swap, ConservesEdgeCountAndIsInvolution) {
  std::mt19937_64 gen(4);
  Rng rng(4);
  AugmentSpec spec;
  for (int i = 0; i < 50; ++i) {
    const auto edges = random_edges(gen, 64, 0.1);
    SwapRecord rec;
    const auto once = copy_paste_once(edges, rng, spec, &rec);
    EXPECT_EQ(once.edge_count(), edges.edge_count());
    EXPECT_FALSE(placements_overlap(rec.region.mask, rec.first, rec.second));
    EXPECT_FALSE(rec.first == rec.second);
    const auto twice = swap_regions(once, rec.region.mask, rec.first, rec.second);
    EXPECT_EQ(twice, edges);
  }
}

TEST(Swap, DiffersWhenContentDiffers) {
  Mask region(4, 4, 1);
  EdgeMap edges{Mask(16, 16, 0)};
  edges.pixels(1, 1) = 1;
  const auto out = swap_regions(edges, region, {0, 0}, {8, 8});
  EXPECT_NE(out, edges);
  EXPECT_EQ(out.pixels(9, 9), 1);
  EXPECT_THROW(swap_regions(edges, region, {0, 0}, {2, 2}), Error);
  EXPECT_THROW(swap_regions(edges, region, {0, 0}, {0, 0}), Error);
  EXPECT_THROW(swap_regions(edges, region, {0, 0}, {14, 14}), Error);
}

TEST(Swap, OpsZeroIsIdentity) {
  std::mt19937_64 gen(5);
  Rng rng(5);
  AugmentSpec spec;
  spec.max_copy_paste_ops = 0;
  const auto edges = random_edges(gen, 32, 0.2);
  EXPECT_EQ(augment_edge_map(edges, rng, spec), edges);
}

TEST(Swap, FixedSeedIsBitIdentical) {
  std::mt19937_64 gen(6);
  const auto edges = random_edges(gen, 64, 0.1);
  Rng a(99), b(99);
  EXPECT_EQ(augment_edge_map(edges, a, AugmentSpec{}), augment_edge_map(edges, b, AugmentSpec{}));
}

TEST(TrainingPairs, CleanFirstSharedTargetBoundedLength) {
  synth::SynthConfig cfg;
  auto gen = derive_rng(1, 1);
  auto img = std::make_shared<const Image2D>(synth::gen_normal(gen, cfg));
  Rng rng(7);
  AugmentSpec spec;
  const auto pairs = build_training_pairs(img, spec, {}, rng);
  EXPECT_GE(pairs.size(), 2u);
  EXPECT_LE(pairs.size(), 21u);
  EXPECT_EQ(pairs.front().edges, imgproc::canny_edges(*img));
  for (const auto& p : pairs) {
    EXPECT_EQ(p.target.get(), img.get());
    EXPECT_EQ(p.edges.edge_count(), pairs.front().edges.edge_count());
  }

  spec.max_augmentations_per_image = 0;
  EXPECT_EQ(build_training_pairs(img, spec, {}, rng).size(), 1u);
  spec.max_augmentations_per_image = 20;
  spec.max_copy_paste_ops = 0;
  EXPECT_EQ(build_training_pairs(img, spec, {}, rng).size(), 1u);
}
