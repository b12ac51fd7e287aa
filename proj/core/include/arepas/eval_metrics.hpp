#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "arepas/image.hpp"

namespace arepas::eval {

struct Confusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  Confusion& operator+=(const Confusion& o);
  bool operator==(const Confusion&) const = default;
};

Confusion confusion_counts(const Mask& pred, const Mask& gt);

// Degenerate denominators: precision is 1 without predictions, recall is 1
// without positives, so dice(empty, empty) == 1 and
// dice == 2 P R / (P + R) whenever P + R > 0.
double dice(const Confusion& c);
double precision(const Confusion& c);
double recall(const Confusion& c);
double dice(const Mask& pred, const Mask& gt);
double precision(const Mask& pred, const Mask& gt);
double recall(const Mask& pred, const Mask& gt);

struct PrPoint {
  double threshold = 0.0;  // pixels with score >= threshold are positive
  double precision = 0.0;
  double recall = 0.0;
};

/// Operating points at every distinct score, from the highest threshold down
/// to the lowest. Throws kInvalidArgument when no label is positive.
std::vector<PrPoint> pr_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Step-wise area sum_k (R_k - R_{k-1}) P_k over pr_curve, R_0 = 0.
double auprc(std::span<const double> scores, std::span<const std::uint8_t> labels);
double auprc(const RealGrid& scores, const Mask& gt);

/// One evaluated image: its final map, ground truth and optionally the
/// region whose pixels enter the AUPRC (the foreground mask).
struct ScoredImage {
  const RealGrid* scores = nullptr;
  const Mask* gt = nullptr;
  const Mask* region = nullptr;
};

inline constexpr int kThresholdCandidates = 256;

/// Candidate thresholds i * max_score / (candidates - 1), i = 0..candidates-1.
std::vector<double> threshold_grid(std::span<const ScoredImage> images, int candidates = kThresholdCandidates);

/// Pooled dice of (score > t) against the ground truth.
double pooled_dice(std::span<const ScoredImage> images, double t);

/// Argmax of pooled dice over threshold_grid; ties go to the lowest
/// threshold. Throws on an empty set.
double select_threshold(std::span<const ScoredImage> images, int candidates = kThresholdCandidates);

struct EvalResult {
  double dice = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double auprc = 0.0;
  double threshold = 0.0;
  std::vector<double> per_image_dice;
  /// Standard error of the per-image dice.
  double dice_stderr = 0.0;
  /// Percentile bootstrap 95% interval of the mean per-image dice.
  double dice_ci_low = 0.0;
  double dice_ci_high = 0.0;
};

inline constexpr int kBootstrapResamples = 1000;

/// Pooled metrics at `threshold`, pooled AUPRC over the region pixels (all
/// pixels when an image has no region) and per-image dice statistics. The
/// bootstrap is seeded, so the result is a pure function of its inputs.
EvalResult evaluate(std::span<const ScoredImage> images, double threshold, std::uint64_t bootstrap_seed = 0);

enum class AblationMode { kFull, kNoPatchScoring, kNoPatchScoringNoAug };

std::string_view ablation_mode_name(AblationMode m);
AblationMode parse_ablation_mode(std::string_view s);

}  // namespace arepas::eval
