#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "arepas/imgproc.hpp"
#include "arepas/synthdata.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace arepas;
using namespace arepas::imgproc;

namespace {

std::array<std::uint64_t, 256> histogram_of(const RealGrid& g, double lo, double hi) {
  std::array<std::uint64_t, 256> h{};
  for (double v : g) {
    const long q = std::lround((v - lo) / (hi - lo) * 255.0);
    h[std::clamp<long>(q, 0, 255)]++;
  }
  return h;
}

Image2D synth_image(const RealGrid& px) {
  Image2D img;
  img.pixels = px;
  img.modality = Modality::kSynth;
  return img;
}

}  // namespace

TEST(NormalizeCt, ClipBoundsMapToRangeEnds) {
  Mask mask(6, 6, 0);
  for (int r = 1; r < 5; ++r)
    for (int c = 1; c < 5; ++c) mask(r, c) = 1;
  for (double hu : {-1000.0, -3000.0}) {
    const auto out = normalize_ct(RealGrid(6, 6, hu), mask, 0);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) EXPECT_EQ(out.pixels[i], (*out.mask)[i] ? -1.0 : 0.0);
  }
  for (double hu : {0.0, 250.0}) {
    const auto out = normalize_ct(RealGrid(6, 6, hu), mask, 0);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) EXPECT_EQ(out.pixels[i], (*out.mask)[i] ? 1.0 : 0.0);
  }
  const auto mid = normalize_ct(RealGrid(6, 6, -500.0), mask, 0);
  EXPECT_EQ(mid.pixels(0, 0), 0.0);
  EXPECT_EQ(mid.pixels.rows(), 4);
  EXPECT_NO_THROW(validate_image(mid));
}

TEST(NormalizeCt, CropsToSquareAndResizes) {
  Mask mask(40, 50, 0);
  for (int r = 5; r < 25; ++r)
    for (int c = 10; c < 40; ++c) mask(r, c) = 1;
  const auto out = normalize_ct(RealGrid(40, 50, -200.0), mask, 64);
  EXPECT_EQ(out.pixels.rows(), 64);
  EXPECT_EQ(out.pixels.cols(), 64);
  EXPECT_EQ(out.modality, Modality::kCT);
  EXPECT_NO_THROW(validate_image(out));
  EXPECT_THROW(normalize_ct(RealGrid(4, 4, 0.0), Mask(4, 4, 0)), Error);
}

TEST(NormalizeMr, ConstantImageScalesToOne) {
  const auto out = normalize_mr(RealGrid(5, 5, 37.0));
  for (double v : out.pixels) EXPECT_EQ(v, 1.0);
}

TEST(NormalizeMr, RampClipsAbovePercentile) {
  RealGrid ramp(1, 100);
  for (int i = 0; i < 100; ++i) ramp[i] = i + 1;
  // Sort-based linear percentile: rank 0.98 * 99 = 97.02 between 98 and 99.
  std::vector<double> sorted(ramp.begin(), ramp.end());
  std::sort(sorted.begin(), sorted.end());
  const double rank = 0.98 * 99.0;
  const double p98 = sorted[97] + (rank - 97.0) * (sorted[98] - sorted[97]);
  EXPECT_NEAR(percentile({ramp.begin(), ramp.end()}, 98.0), p98, 1e-12);

  const auto out = normalize_mr(ramp);
  ASSERT_EQ(out.pixels.rows(), 100);
  for (int i = 0; i < 100; ++i) {
    const double expected = std::min(double(i + 1), p98) / p98;
    EXPECT_NEAR(out.pixels(49, i), expected, 1e-12);
  }
}

TEST(NormalizeMr, PadsOddRowsLowFirst) {
  const auto out = normalize_mr(RealGrid(3, 5, 2.0));
  ASSERT_EQ(out.pixels.rows(), 5);
  for (int c = 0; c < 5; ++c) {
    EXPECT_EQ(out.pixels(0, c), 0.0);
    EXPECT_EQ(out.pixels(4, c), 0.0);
    for (int r = 1; r < 4; ++r) EXPECT_EQ(out.pixels(r, c), 1.0);
  }
  const auto even = pad_to_square(RealGrid(2, 5, 1.0), 0.0);
  EXPECT_EQ(even(1, 0), 1.0);  // top pad 1, bottom pad 2
  EXPECT_EQ(even(3, 0), 0.0);
  EXPECT_THROW(normalize_mr(RealGrid(3, 3, 0.0)), Error);
}

TEST(Geometry, FollowersMatchImageGeometry) {
  Mask mask(20, 30, 0);
  for (int r = 2; r < 12; ++r)
    for (int c = 5; c < 25; ++c) mask(r, c) = 1;
  Mask gt(20, 30, 0);
  gt(6, 15) = 1;
  RealGrid hu(20, 30, -1000.0);
  hu(6, 15) = 0.0;
  const auto img = normalize_ct(hu, mask, 0);
  const auto g = follow_ct_geometry(gt, mask, 0);
  ASSERT_TRUE(g.same_shape(img.pixels));
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g[i] != 0, img.pixels[i] == 1.0);

  const auto mr = follow_mr_geometry(Mask(3, 5, 1));
  EXPECT_EQ(mr.rows(), 5);
  EXPECT_EQ(mr(0, 0), 0);
  EXPECT_EQ(mr(1, 0), 1);
}

TEST(Otsu, BimodalSeparatesClasses) {
  Image2D img;
  img.modality = Modality::kMRI;
  img.pixels = RealGrid(10, 10, 0.1);
  for (int i = 50; i < 100; ++i) img.pixels[i] = 0.9;
  const double t = otsu_threshold(img, Mask(10, 10, 1));
  EXPECT_GT(t, 0.1);
  EXPECT_LT(t, 0.9);
}

TEST(Otsu, MatchesBruteForceOnRandomImages) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto px = testing_util::random_grid(rng, 32, 32, -1.0, 1.0);
    const auto hist = histogram_of(px, -1.0, 1.0);
    EXPECT_EQ(region_histogram(synth_image(px), Mask(32, 32, 1)), hist);
    EXPECT_EQ(otsu_level(hist), oracle::otsu_brute_force(hist));
  }
}

TEST(Otsu, MatchesBruteForceOnClusters) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::uniform_int_distribution<int> cluster(0, 2);
  const double centers[3] = {-0.7, 0.0, 0.6};
  for (int trial = 0; trial < 20; ++trial) {
    RealGrid px(32, 32);
    for (auto& v : px) v = std::clamp(centers[cluster(rng)] + noise(rng), -1.0, 1.0);
    const auto hist = histogram_of(px, -1.0, 1.0);
    EXPECT_EQ(otsu_level(hist), oracle::otsu_brute_force(hist));
  }
}

TEST(Otsu, DegenerateHistogramThrows) {
  try {
    otsu_threshold(synth_image(RealGrid(8, 8, 0.3)), Mask(8, 8, 1));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateHistogram);
  }
}

TEST(Canny, ConstantImageUsesFallback) {
  const auto img = synth_image(RealGrid(16, 16, 0.2));
  EXPECT_THROW(canny_edges(img), Error);
  CannyOptions opts;
  opts.fallback_threshold = 10.0;
  EXPECT_EQ(canny_edges(img, opts).edge_count(), 0u);
}

TEST(Canny, VerticalStepGivesSingleLine) {
  RealGrid px(32, 32, -0.5);
  for (int r = 0; r < 32; ++r)
    for (int c = 16; c < 32; ++c) px(r, c) = 0.5;
  const auto edges = canny_edges(synth_image(px));
  for (int r = 1; r < 31; ++r) {
    int count = 0, col = -1;
    for (int c = 0; c < 32; ++c) {
      if (edges.pixels(r, c)) {
        ++count;
        col = c;
      }
    }
    EXPECT_EQ(count, 1) << "row " << r;
    EXPECT_TRUE(col == 15 || col == 16);
  }
  for (int c = 0; c < 32; ++c) {
    EXPECT_EQ(edges.pixels(0, c), 0);
    EXPECT_EQ(edges.pixels(31, c), 0);
  }
}

TEST(Canny, MatchesNaiveOracleOnVesselImages) {
  synth::SynthConfig cfg;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    auto rng = derive_rng(seed, 3);
    const auto img = synth::gen_normal(rng, cfg);
    const CannyOptions opts;
    const auto range = intensity_range(img.modality);
    const double ref = (otsu_threshold(img, img.foreground()) - range.lo) / (range.hi - range.lo) * 255.0;
    const auto got = canny_edges(img, opts);
    const auto want = oracle::canny(testing_util::to_rows(to_8bit_scale(img)), opts.low_fraction * ref,
                                    opts.high_fraction * ref, opts.sigma);
    ASSERT_GT(got.edge_count(), 0u);
    int mismatches = 0;
    for (int r = 0; r < got.rows(); ++r)
      for (int c = 0; c < got.cols(); ++c) mismatches += got.pixels(r, c) != want[r][c];
    EXPECT_EQ(mismatches, 0) << "seed " << seed;
  }
}

TEST(Canny, HysteresisKeepsWeakPixelsConnectedToStrong) {
  std::mt19937_64 rng(5);
  const auto px = testing_util::random_grid(rng, 24, 24, 0.0, 255.0);
  const auto loose = canny(px, 20.0, 200.0, 1.0);
  const auto want = oracle::canny(testing_util::to_rows(px), 20.0, 200.0, 1.0);
  for (int r = 0; r < 24; ++r)
    for (int c = 0; c < 24; ++c) EXPECT_EQ(loose.pixels(r, c), want[r][c]);
  EXPECT_THROW(canny(px, 50.0, 10.0, 1.0), Error);
}

TEST(Filtering, GaussianKernelNormalized) {
  const auto k = gaussian_kernel(1.5);
  EXPECT_EQ(k.size(), 11u);
  double s = 0;
  for (double v : k) s += v;
  EXPECT_NEAR(s, 1.0, 1e-12);
  RealGrid flat(9, 9, 3.0);
  for (double v : gaussian_blur(flat, 2.0)) EXPECT_NEAR(v, 3.0, 1e-12);
}

TEST(Morphology, OpenCloseAndComponents) {
  Mask m(9, 9, 0);
  for (int r = 1; r < 6; ++r)
    for (int c = 1; c < 6; ++c) m(r, c) = 1;
  m(8, 8) = 1;
  EXPECT_EQ(count_nonzero(erode(m)), 9u);
  EXPECT_EQ(open(m)(8, 8), 0);
  const auto [labels, sizes] = label_components(m);
  ASSERT_EQ(sizes.size(), 2u);
  EXPECT_EQ(count_nonzero(largest_component(m)), 25u);
  const auto box = bounding_box(m);
  ASSERT_TRUE(box);
  EXPECT_EQ(box->height, 8);
  EXPECT_FALSE(bounding_box(Mask(3, 3, 0)));
  EXPECT_EQ(reflect101(-1, 5), 1);
  EXPECT_EQ(reflect101(5, 5), 3);
}
