#include <gtest/gtest.h>

#include <boost/math/distributions/students_t.hpp>
#include <fstream>
#include <set>
#include <sstream>

#include "arepas/image_io.hpp"
#include "arepas/imgproc.hpp"
#include "arepas/synthdata.hpp"
#include "test_util.hpp"

using namespace arepas;
using namespace arepas::synth;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double welch_p(const std::vector<double>& a, const std::vector<double>& b) {
  const auto stats = [](const std::vector<double>& v) {
    double m = 0, s = 0;
    for (double x : v) m += x;
    m /= v.size();
    for (double x : v) s += (x - m) * (x - m);
    return std::pair{m, s / (v.size() - 1)};
  };
  const auto [ma, va] = stats(a);
  const auto [mb, vb] = stats(b);
  const double na = a.size(), nb = b.size();
  const double se2 = va / na + vb / nb;
  const double t = (ma - mb) / std::sqrt(se2);
  const double df = se2 * se2 / (va * va / (na * na * (na - 1)) + vb * vb / (nb * nb * (nb - 1)));
  return 2 * boost::math::cdf(boost::math::complement(boost::math::students_t(df), std::abs(t)));
}

}  // namespace

TEST(GenNormal, ValidDeterministicWithEdges) {
  SynthConfig cfg;
  auto a = derive_rng(1, 1), b = derive_rng(1, 1);
  const auto x = gen_normal(a, cfg), y = gen_normal(b, cfg);
  EXPECT_NO_THROW(validate_image(x));
  EXPECT_EQ(x.pixels, y.pixels);
  EXPECT_EQ(x.pixels.rows(), 64);
  ASSERT_TRUE(x.mask);
  EXPECT_GT(imgproc::canny_edges(x).edge_count(), 0u);
  for (std::size_t i = 0; i < x.pixels.size(); ++i) {
    if (!(*x.mask)[i]) EXPECT_EQ(x.pixels[i], 0.0);
  }
}

TEST(InjectAnomaly, BlobAreasInRangeAndInsideForeground) {
  SynthConfig cfg;
  for (std::uint64_t s = 0; s < 30; ++s) {
    auto rng = derive_rng(2, s);
    const auto img = gen_normal(rng, cfg);
    const auto inj = inject_anomaly(img, rng, cfg);
    EXPECT_GE(inj.blob_area_fractions.size(), 1u);
    EXPECT_LE(inj.blob_area_fractions.size(), 3u);
    for (double f : inj.blob_area_fractions) {
      EXPECT_GE(f, cfg.anomaly_area_frac.lo);
      EXPECT_LE(f, cfg.anomaly_area_frac.hi);
    }
    EXPECT_GT(count_nonzero(inj.gt), 0u);
    for (std::size_t i = 0; i < inj.gt.size(); ++i) {
      if (inj.gt[i]) EXPECT_TRUE((*img.mask)[i]);
    }
    EXPECT_NO_THROW(validate_image(inj.image));
  }
}

TEST(InjectAnomaly, ZeroBlobsIsIdentity) {
  SynthConfig cfg;
  auto rng = derive_rng(3, 0);
  const auto img = gen_normal(rng, cfg);
  const auto inj = inject_anomaly(img, rng, cfg, 0);
  EXPECT_EQ(inj.image.pixels, img.pixels);
  EXPECT_EQ(count_nonzero(inj.gt), 0u);
}

TEST(InjectAnomaly, ShiftsMeanInsideMask) {
  SynthConfig cfg;
  double total_shift = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto rng = derive_rng(4, s);
    const auto img = gen_normal(rng, cfg);
    const auto inj = inject_anomaly(img, rng, cfg);
    double before = 0, after = 0;
    for (std::size_t i = 0; i < inj.gt.size(); ++i) {
      if (!inj.gt[i]) continue;
      before += img.pixels[i];
      after += inj.image.pixels[i];
    }
    total_shift += (after - before) / count_nonzero(inj.gt);
  }
  EXPECT_GE(total_shift / 100, 0.5 * cfg.anomaly_intensity_shift.lo);
}

TEST(InjectAnomaly, TextureOutsideMaskMatchesNormals) {
  SynthConfig cfg;
  std::vector<double> normal_means, anomalous_means;
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto rn = derive_rng(5, s);
    const auto n = gen_normal(rn, cfg);
    double sum = 0;
    int cnt = 0;
    for (std::size_t i = 0; i < n.pixels.size(); ++i) {
      if ((*n.mask)[i]) sum += n.pixels[i], ++cnt;
    }
    normal_means.push_back(sum / cnt);

    auto ra = derive_rng(6, s);
    const auto base = gen_normal(ra, cfg);
    const auto inj = inject_anomaly(base, ra, cfg);
    // The soft blob edge extends past the thresholded mask; skip a margin.
    auto near = inj.gt;
    for (int k = 0; k < 4; ++k) near = imgproc::dilate(near);
    sum = 0;
    cnt = 0;
    for (std::size_t i = 0; i < inj.image.pixels.size(); ++i) {
      if ((*inj.image.mask)[i] && !near[i]) sum += inj.image.pixels[i], ++cnt;
    }
    anomalous_means.push_back(sum / cnt);
  }
  EXPECT_GT(welch_p(normal_means, anomalous_means), 0.001);
}

TEST(GenDataset, CountsSplitsAndCollision) {
  SynthConfig cfg;
  cfg.n_normal = 6;
  cfg.n_val = 3;
  cfg.n_test = 2;
  cfg.seed = 9;
  testing_util::TempDir a("synth_a"), b("synth_b");
  const auto m = gen_dataset(cfg, a.path());
  EXPECT_EQ(m.split(data::Split::kTrain).size(), 6u);
  EXPECT_EQ(m.split(data::Split::kVal).size(), 3u);
  EXPECT_EQ(m.split(data::Split::kTest).size(), 2u);
  std::set<std::string> ids;
  for (const auto& r : m.records) {
    EXPECT_TRUE(ids.insert(r.image_id).second);
    EXPECT_EQ(r.gt_path.has_value(), r.split != data::Split::kTrain);
  }
  const auto reread = data::read_manifest(a.path() / "manifest.csv");
  EXPECT_EQ(reread.records.size(), 11u);
  for (const auto& r : reread.split(data::Split::kTest)) {
    const auto gt = io::read_mask(*r->gt_path);
    const auto fg = io::read_mask(*r->mask_path);
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (gt[i]) EXPECT_TRUE(fg[i]);
    }
  }

  EXPECT_THROW(gen_dataset(cfg, a.path()), Error);

  gen_dataset(cfg, b.path());
  for (const auto& entry : std::filesystem::recursive_directory_iterator(a.path())) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), a.path());
    EXPECT_EQ(slurp(entry.path()), slurp(b.path() / rel)) << rel;
  }
}

TEST(SynthConfigValidation, RejectsBadRanges) {
  SynthConfig cfg;
  cfg.anomaly_area_frac = {0.2, 0.1};
  EXPECT_THROW(validate(cfg), Error);
  cfg = {};
  cfg.image_size = 16;
  EXPECT_THROW(validate(cfg), Error);
}
