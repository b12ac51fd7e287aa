#include <gtest/gtest.h>

#include "arepas/eval_metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace arepas;
using namespace arepas::eval;

TEST(Confusion, CornerCases) {
  const Mask ones(4, 4, 1), zeros(4, 4, 0);
  EXPECT_EQ(confusion_counts(ones, ones), (Confusion{16, 0, 0, 0}));
  EXPECT_EQ(confusion_counts(zeros, ones), (Confusion{0, 0, 16, 0}));
  EXPECT_EQ(dice(ones, ones), 1.0);
  EXPECT_EQ(dice(zeros, zeros), 1.0);
  EXPECT_EQ(precision(zeros, ones), 1.0);
  EXPECT_EQ(recall(ones, zeros), 1.0);
  EXPECT_THROW(confusion_counts(Mask(2, 2), Mask(3, 3)), Error);
}

TEST(Confusion, MatchesPixelLoop) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const auto p = testing_util::random_mask(rng, 16, 16, 0.3), g = testing_util::random_mask(rng, 16, 16, 0.4);
    const auto c = confusion_counts(p, g);
    const auto o = oracle::count_pixels(testing_util::to_vector(p), testing_util::to_vector(g));
    EXPECT_EQ(c, (Confusion{o.tp, o.fp, o.fn, o.tn}));
    EXPECT_EQ(dice(p, g), oracle::dice(o));
    EXPECT_EQ(precision(p, g), oracle::precision(o));
    EXPECT_EQ(recall(p, g), oracle::recall(o));
  }
}

TEST(Dice, ClosedForms) {
  Mask gt(10, 20, 0), pred(10, 20, 0), other(10, 20, 0);
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 10; ++c) gt(r, c) = 1;
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 10; ++c) pred(r, c) = 1;
  for (int r = 0; r < 10; ++r) other(r, 15) = 1;
  EXPECT_DOUBLE_EQ(dice(pred, gt), 2.0 * 50 / 150);
  EXPECT_EQ(dice(other, gt), 0.0);
  EXPECT_EQ(dice(gt, gt), 1.0);
}

TEST(Auprc, PerfectAndConstantScores) {
  const std::vector<double> s = {0.9, 0.8, 0.1, 0.2, 0.3};
  const std::vector<std::uint8_t> y = {1, 1, 0, 0, 0};
  EXPECT_DOUBLE_EQ(auprc(s, y), 1.0);
  const std::vector<double> c(5, 0.4);
  EXPECT_DOUBLE_EQ(auprc(c, y), 0.4);
  EXPECT_THROW(auprc(c, std::vector<std::uint8_t>(5, 0)), Error);
}

TEST(Auprc, MatchesExhaustiveEnumeration) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> s(1000);
    std::vector<std::uint8_t> y(1000);
    for (int k = 0; k < 1000; ++k) {
      y[k] = u(rng) < 0.2;
      s[k] = std::round((u(rng) + 0.5 * y[k]) * 50) / 50;
    }
    y[0] = 1;
    EXPECT_NEAR(auprc(s, y), oracle::auprc(s, y), 1e-9);
  }
}

TEST(PrCurve, EndpointAtLowestScore) {
  std::mt19937_64 rng(3);
  auto s = testing_util::random_grid(rng, 8, 8, 0.1, 1.0);
  auto g = testing_util::random_mask(rng, 8, 8, 0.25);
  g[0] = 1;
  const auto curve = pr_curve(s.values(), g.values());
  EXPECT_DOUBLE_EQ(curve.back().recall, 1.0);
  EXPECT_DOUBLE_EQ(curve.back().precision, double(count_nonzero(g)) / 64.0);
  for (std::size_t k = 1; k < curve.size(); ++k) EXPECT_LT(curve[k].threshold, curve[k - 1].threshold);
}

TEST(Threshold, ExactScoresPickLowestPerfectCandidate) {
  std::mt19937_64 rng(4);
  const auto gt = testing_util::random_mask(rng, 16, 16, 0.3);
  RealGrid s(16, 16);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = gt[i];
  const ScoredImage im{&s, &gt, nullptr};
  const std::vector<ScoredImage> set = {im};
  const double t = select_threshold(set);
  EXPECT_EQ(pooled_dice(set, t), 1.0);
  for (double c : threshold_grid(set)) {
    if (c >= t) break;
    EXPECT_LT(pooled_dice(set, c), 1.0);
  }
}

TEST(Threshold, AllZeroScoresGiveZero) {
  const RealGrid s(8, 8, 0.0);
  const Mask gt(8, 8, 0);
  const std::vector<ScoredImage> set = {{&s, &gt, nullptr}};
  EXPECT_EQ(select_threshold(set), 0.0);
  EXPECT_THROW(select_threshold(std::vector<ScoredImage>{}), Error);
}

TEST(Threshold, WithinOneStepOfDenseOptimum) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<RealGrid> scores;
  std::vector<Mask> gts;
  for (int i = 0; i < 4; ++i) {
    gts.push_back(testing_util::random_mask(rng, 64, 64, 0.3));
    RealGrid s(64, 64);
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = std::max(0.0, gts.back()[k] * 0.9 + noise(rng));
    scores.push_back(std::move(s));
  }
  std::vector<ScoredImage> set;
  for (int i = 0; i < 4; ++i) set.push_back({&scores[i], &gts[i], nullptr});
  const auto grid = threshold_grid(set);
  const double max_score = grid.back();

  double best_t = 0, best = -1;
  for (int k = 0; k <= 10000; ++k) {
    const double t = max_score * k / 10000.0;
    oracle::Counts c;
    for (int i = 0; i < 4; ++i)
      for (std::size_t p = 0; p < scores[i].size(); ++p) {
        const bool pr = scores[i][p] > t, y = gts[i][p] != 0;
        if (pr && y) c.tp++;
        else if (pr) c.fp++;
        else if (y) c.fn++;
      }
    if (oracle::dice(c) > best) best = oracle::dice(c), best_t = t;
  }
  EXPECT_LE(std::abs(select_threshold(set) - best_t), max_score / 255.0 + 1e-12);
}

TEST(Evaluate, PerfectPredictionsAndStatistics) {
  std::mt19937_64 rng(6);
  std::vector<RealGrid> scores;
  std::vector<Mask> gts;
  for (int i = 0; i < 5; ++i) {
    gts.push_back(testing_util::random_mask(rng, 8, 8, 0.3));
    gts.back()[0] = 1;
    RealGrid s(8, 8);
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = gts.back()[k];
    scores.push_back(std::move(s));
  }
  std::vector<ScoredImage> set;
  for (int i = 0; i < 5; ++i) set.push_back({&scores[i], &gts[i], nullptr});
  const auto res = evaluate(set, 0.5, 1);
  EXPECT_EQ(res.dice, 1.0);
  EXPECT_EQ(res.precision, 1.0);
  EXPECT_EQ(res.recall, 1.0);
  EXPECT_EQ(res.auprc, 1.0);
  EXPECT_EQ(res.dice_stderr, 0.0);
  EXPECT_EQ(res.per_image_dice.size(), 5u);
  EXPECT_EQ(res.dice_ci_low, 1.0);

  const auto noisy = evaluate(set, 1.5, 1);
  EXPECT_EQ(noisy.recall, 0.0);
  const auto again = evaluate(set, 0.5, 1);
  EXPECT_EQ(again.dice_ci_high, res.dice_ci_high);
}

TEST(Evaluate, RegionRestrictsAuprc) {
  RealGrid s(1, 4, std::vector<double>{0.9, 0.1, 0.95, 0.2});
  Mask gt(1, 4, std::vector<std::uint8_t>{1, 0, 0, 0});
  Mask region(1, 4, std::vector<std::uint8_t>{1, 1, 0, 1});
  const std::vector<ScoredImage> with = {{&s, &gt, &region}}, without = {{&s, &gt, nullptr}};
  EXPECT_EQ(evaluate(with, 0.5).auprc, 1.0);
  EXPECT_DOUBLE_EQ(evaluate(without, 0.5).auprc, 0.5);
}

TEST(Ablation, ModeNamesRoundTrip) {
  for (auto m : {AblationMode::kFull, AblationMode::kNoPatchScoring, AblationMode::kNoPatchScoringNoAug}) {
    EXPECT_EQ(parse_ablation_mode(ablation_mode_name(m)), m);
  }
  EXPECT_THROW(parse_ablation_mode("BOGUS"), Error);
}
