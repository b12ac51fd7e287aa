#include "arepas/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace arepas::eval {

Confusion& Confusion::operator+=(const Confusion& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

Confusion confusion_counts(const Mask& pred, const Mask& gt) {
  require_same_shape(pred, gt, "confusion_counts");
  Confusion c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0;
    const bool g = gt[i] != 0;
    if (p && g) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double dice(const Confusion& c) {
  const auto denom = 2 * c.tp + c.fp + c.fn;
  return denom == 0 ? 1.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

double precision(const Confusion& c) {
  const auto denom = c.tp + c.fp;
  return denom == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(denom);
}

double recall(const Confusion& c) {
  const auto denom = c.tp + c.fn;
  return denom == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(denom);
}

double dice(const Mask& pred, const Mask& gt) { return dice(confusion_counts(pred, gt)); }
double precision(const Mask& pred, const Mask& gt) { return precision(confusion_counts(pred, gt)); }
double recall(const Mask& pred, const Mask& gt) { return recall(confusion_counts(pred, gt)); }

std::vector<PrPoint> pr_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::kShapeMismatch, "pr_curve: scores/labels size mismatch");
  std::uint64_t positives = 0;
  for (auto l : labels) positives += l != 0;
  if (positives == 0) throw Error(ErrorCode::kInvalidArgument, "pr_curve: ground truth has no positive pixel");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<PrPoint> curve;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double t = scores[order[k]];
    for (; k < order.size() && scores[order[k]] == t; ++k) {
      if (labels[order[k]]) ++tp;
      else ++fp;
    }
    curve.push_back({t, static_cast<double>(tp) / static_cast<double>(tp + fp),
                     static_cast<double>(tp) / static_cast<double>(positives)});
  }
  return curve;
}

double auprc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  double area = 0.0;
  double prev_recall = 0.0;
  for (const auto& p : pr_curve(scores, labels)) {
    area += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
  }
  return area;
}

double auprc(const RealGrid& scores, const Mask& gt) {
  require_same_shape(scores, gt, "auprc");
  return auprc(scores.values(), gt.values());
}

namespace {

void check_image(const ScoredImage& im) {
  if (!im.scores || !im.gt) throw Error(ErrorCode::kInvalidArgument, "scored image without scores or ground truth");
  require_same_shape(*im.scores, *im.gt, "scored image");
  if (im.region) require_same_shape(*im.scores, *im.region, "scored image region");
}

Confusion confusion_at(const ScoredImage& im, double t) {
  Confusion c;
  const auto& s = *im.scores;
  const auto& g = *im.gt;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool p = s[i] > t;
    const bool y = g[i] != 0;
    if (p && y) ++c.tp;
    else if (p) ++c.fp;
    else if (y) ++c.fn;
    else ++c.tn;
  }
  return c;
}

}  // namespace

std::vector<double> threshold_grid(std::span<const ScoredImage> images, int candidates) {
  if (candidates < 2) throw Error(ErrorCode::kInvalidArgument, "threshold_grid: need at least 2 candidates");
  double max_score = 0.0;
  for (const auto& im : images) {
    check_image(im);
    for (double v : *im.scores) max_score = std::max(max_score, v);
  }
  std::vector<double> grid(candidates);
  for (int i = 0; i < candidates; ++i) grid[i] = i * max_score / (candidates - 1);
  return grid;
}

double pooled_dice(std::span<const ScoredImage> images, double t) {
  Confusion total;
  for (const auto& im : images) {
    check_image(im);
    total += confusion_at(im, t);
  }
  return dice(total);
}

double select_threshold(std::span<const ScoredImage> images, int candidates) {
  if (images.empty()) throw Error(ErrorCode::kInvalidArgument, "select_threshold: empty validation set");
  double best_t = 0.0;
  double best = -1.0;
  for (double t : threshold_grid(images, candidates)) {
    const double d = pooled_dice(images, t);
    if (d > best) {
      best = d;
      best_t = t;
    }
  }
  return best_t;
}

EvalResult evaluate(std::span<const ScoredImage> images, double threshold, std::uint64_t bootstrap_seed) {
  if (images.empty()) throw Error(ErrorCode::kInvalidArgument, "evaluate: empty image set");
  EvalResult res;
  res.threshold = threshold;
  Confusion total;
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  for (const auto& im : images) {
    check_image(im);
    const auto c = confusion_at(im, threshold);
    total += c;
    res.per_image_dice.push_back(dice(c));
    for (std::size_t i = 0; i < im.scores->size(); ++i) {
      if (im.region && !(*im.region)[i]) continue;
      scores.push_back((*im.scores)[i]);
      labels.push_back((*im.gt)[i] != 0);
    }
  }
  res.dice = dice(total);
  res.precision = precision(total);
  res.recall = recall(total);
  res.auprc = auprc(scores, labels);

  const auto n = res.per_image_dice.size();
  const double mean = std::accumulate(res.per_image_dice.begin(), res.per_image_dice.end(), 0.0) / n;
  if (n > 1) {
    double ss = 0.0;
    for (double d : res.per_image_dice) ss += (d - mean) * (d - mean);
    res.dice_stderr = std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
  }
  Rng rng = derive_rng(bootstrap_seed, 0x424f4f54ULL);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> means(kBootstrapResamples);
  for (auto& m : means) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += res.per_image_dice[pick(rng)];
    m = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  res.dice_ci_low = means[static_cast<std::size_t>(0.025 * (kBootstrapResamples - 1))];
  res.dice_ci_high = means[static_cast<std::size_t>(0.975 * (kBootstrapResamples - 1))];
  return res;
}

std::string_view ablation_mode_name(AblationMode m) {
  switch (m) {
    case AblationMode::kFull: return "FULL";
    case AblationMode::kNoPatchScoring: return "NO_PATCH_SCORING";
    case AblationMode::kNoPatchScoringNoAug: return "NO_PATCH_SCORING_NO_AUG";
  }
  return "?";
}

AblationMode parse_ablation_mode(std::string_view s) {
  for (auto m : {AblationMode::kFull, AblationMode::kNoPatchScoring, AblationMode::kNoPatchScoringNoAug}) {
    if (s == ablation_mode_name(m)) return m;
  }
  throw Error(ErrorCode::kConfig, "unknown ablation mode '" + std::string(s) + "'");
}

}  // namespace arepas::eval
