#include "arepas/anomaly_infer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace arepas::infer {

std::vector<Origin> grid_origins(int rows, int cols, int patch_size, int stride) {
  if (patch_size < 1 || stride < 1) throw Error(ErrorCode::kInvalidArgument, "grid_origins: bad patch/stride");
  if (patch_size > rows || patch_size > cols) {
    throw Error(ErrorCode::kInvalidArgument, "patch size " + std::to_string(patch_size) +
                                                 " larger than image " + std::to_string(rows) + "x" +
                                                 std::to_string(cols));
  }
  std::vector<Origin> origins;
  for (int r = 0; r + patch_size <= rows; r += stride) {
    for (int c = 0; c + patch_size <= cols; c += stride) origins.push_back({r, c});
  }
  return origins;
}

AnomalyMap heatmap(const Image2D& real, const Image2D& rec, const PatchScorer& scorer, int patch_size,
                   int stride) {
  require_same_shape(real.pixels, rec.pixels, "heatmap");
  if (stride <= 0) stride = std::max(1, patch_size / 2);
  const int rows = real.pixels.rows();
  const int cols = real.pixels.cols();
  const auto origins = grid_origins(rows, cols, patch_size, stride);
  const auto scores = scorer.score(real.pixels, rec.pixels, origins, patch_size);
  if (scores.size() != origins.size()) {
    throw Error(ErrorCode::kInvalidArgument, "heatmap: scorer returned the wrong number of scores");
  }

  RealGrid sum(rows, cols, 0.0);
  Grid<int> count(rows, cols, 0);
  for (std::size_t k = 0; k < origins.size(); ++k) {
    const double a = scores[k];
    if (!(a >= 0.0 && a <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "heatmap: similarity score outside [0, 1]");
    }
    for (int r = origins[k].row; r < origins[k].row + patch_size; ++r) {
      for (int c = origins[k].col; c < origins[k].col + patch_size; ++c) {
        sum(r, c) += 1.0 - a;
        ++count(r, c);
      }
    }
  }

  const int covered_rows = origins.back().row + patch_size;
  const int covered_cols = origins.back().col + patch_size;
  AnomalyMap map{RealGrid(rows, cols), Grid<int>(rows, cols)};
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int sr = std::min(r, covered_rows - 1);
      const int sc = std::min(c, covered_cols - 1);
      map.pixels(r, c) = sum(sr, sc) / count(sr, sc);
      map.coverage(r, c) = count(sr, sc);
    }
  }
  return map;
}

namespace {

FinalMap weighted_residual(const Image2D& real, const Image2D& rec, const RealGrid* weights) {
  require_same_shape(real.pixels, rec.pixels, "final_map");
  if (weights) require_same_shape(real.pixels, *weights, "final_map heat-map");
  if (real.mask) require_same_shape(real.pixels, *real.mask, "final_map mask");
  FinalMap out{RealGrid(real.pixels.rows(), real.pixels.cols(), 0.0)};
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    if (real.mask && !(*real.mask)[i]) continue;
    const double residual = std::abs(real.pixels[i] - rec.pixels[i]);
    out.pixels[i] = weights ? residual * (*weights)[i] : residual;
  }
  return out;
}

}  // namespace

FinalMap final_map(const Image2D& real, const Image2D& rec, const AnomalyMap& a) {
  return weighted_residual(real, rec, &a.pixels);
}

FinalMap residual_map(const Image2D& real, const Image2D& rec) { return weighted_residual(real, rec, nullptr); }

Mask apply_threshold(const FinalMap& fm, double t) {
  if (!(t >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "apply_threshold: threshold must be >= 0");
  Mask out(fm.pixels.rows(), fm.pixels.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fm.pixels[i] > t;
  return out;
}

}  // namespace arepas::infer
