#include "arepas/imgproc.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace arepas::imgproc {

// ---------------------------------------------------------------------------
// Geometry helpers
// ---------------------------------------------------------------------------

int reflect101(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

template <typename T>
Grid<T> pad_to_square(const Grid<T>& grid, T fill) {
  const int side = std::max(grid.rows(), grid.cols());
  const int top = (side - grid.rows()) / 2;
  const int left = (side - grid.cols()) / 2;
  Grid<T> out(side, side, fill);
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) out(r + top, c + left) = grid(r, c);
  }
  return out;
}

template Grid<double> pad_to_square(const Grid<double>&, double);
template Grid<std::uint8_t> pad_to_square(const Grid<std::uint8_t>&, std::uint8_t);

RealGrid resize_bilinear(const RealGrid& in, int rows, int cols) {
  if (in.empty() || rows <= 0 || cols <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "resize_bilinear: empty input or target");
  }
  if (in.rows() == rows && in.cols() == cols) return in;
  RealGrid out(rows, cols);
  const double sy = static_cast<double>(in.rows()) / rows;
  const double sx = static_cast<double>(in.cols()) / cols;
  for (int r = 0; r < rows; ++r) {
    const double y = std::clamp((r + 0.5) * sy - 0.5, 0.0, in.rows() - 1.0);
    const int y0 = static_cast<int>(std::floor(y));
    const int y1 = std::min(y0 + 1, in.rows() - 1);
    const double fy = y - y0;
    for (int c = 0; c < cols; ++c) {
      const double x = std::clamp((c + 0.5) * sx - 0.5, 0.0, in.cols() - 1.0);
      const int x0 = static_cast<int>(std::floor(x));
      const int x1 = std::min(x0 + 1, in.cols() - 1);
      const double fx = x - x0;
      const double top = in(y0, x0) * (1.0 - fx) + in(y0, x1) * fx;
      const double bottom = in(y1, x0) * (1.0 - fx) + in(y1, x1) * fx;
      out(r, c) = top * (1.0 - fy) + bottom * fy;
    }
  }
  return out;
}

Mask resize_nearest(const Mask& in, int rows, int cols) {
  if (in.empty() || rows <= 0 || cols <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "resize_nearest: empty input or target");
  }
  if (in.rows() == rows && in.cols() == cols) return in;
  Mask out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const int sr = std::min(in.rows() - 1, static_cast<int>((r + 0.5) * in.rows() / rows));
    for (int c = 0; c < cols; ++c) {
      const int sc = std::min(in.cols() - 1, static_cast<int>((c + 0.5) * in.cols() / cols));
      out(r, c) = in(sr, sc);
    }
  }
  return out;
}

std::optional<BoundingBox> bounding_box(const Mask& m) {
  int r0 = m.rows(), r1 = -1, c0 = m.cols(), c1 = -1;
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      if (!m(r, c)) continue;
      r0 = std::min(r0, r);
      r1 = std::max(r1, r);
      c0 = std::min(c0, c);
      c1 = std::max(c1, c);
    }
  }
  if (r1 < 0) return std::nullopt;
  return BoundingBox{r0, c0, r1 - r0 + 1, c1 - c0 + 1};
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "percentile of empty sample");
  std::sort(values.begin(), values.end());
  const double rank = std::clamp(q, 0.0, 100.0) / 100.0 * (values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (rank - lo) * (values[hi] - values[lo]);
}

Image2D normalize_ct(const RealGrid& hu, const Mask& lung_mask, int output_size) {
  require_same_shape(hu, lung_mask, "normalize_ct");
  const auto box = bounding_box(lung_mask);
  if (!box) throw Error(ErrorCode::kNoForeground, "normalize_ct: no foreground in lung mask");

  const double span = kCtClipHighHu - kCtClipLowHu;
  const int side = std::max(box->height, box->width);
  const int top = box->row - (side - box->height) / 2;
  const int left = box->col - (side - box->width) / 2;

  RealGrid cropped(side, side, 0.0);
  Mask cropped_mask(side, side, 0);
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      const int sr = top + r;
      const int sc = left + c;
      if (!hu.contains(sr, sc) || !lung_mask(sr, sc)) continue;
      const double clipped = std::clamp(hu(sr, sc), kCtClipLowHu, kCtClipHighHu);
      cropped(r, c) = 2.0 * (clipped - kCtClipLowHu) / span - 1.0;
      cropped_mask(r, c) = 1;
    }
  }

  Image2D out;
  out.modality = Modality::kCT;
  if (output_size > 0 && output_size != side) {
    out.pixels = resize_bilinear(cropped, output_size, output_size);
    out.mask = resize_nearest(cropped_mask, output_size, output_size);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
      if (!(*out.mask)[i]) out.pixels[i] = 0.0;
    }
  } else {
    out.pixels = std::move(cropped);
    out.mask = std::move(cropped_mask);
  }
  return out;
}

Mask follow_ct_geometry(const Mask& aux, const Mask& lung_mask, int output_size) {
  require_same_shape(aux, lung_mask, "follow_ct_geometry");
  const auto box = bounding_box(lung_mask);
  if (!box) throw Error(ErrorCode::kNoForeground, "follow_ct_geometry: no foreground in lung mask");
  const int side = std::max(box->height, box->width);
  const int top = box->row - (side - box->height) / 2;
  const int left = box->col - (side - box->width) / 2;
  Mask cropped(side, side, 0);
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      if (aux.contains(top + r, left + c)) cropped(r, c) = aux(top + r, left + c) ? 1 : 0;
    }
  }
  if (output_size > 0 && output_size != side) return resize_nearest(cropped, output_size, output_size);
  return cropped;
}

Mask follow_mr_geometry(const Mask& aux, int output_size) {
  if (aux.empty()) throw Error(ErrorCode::kInvalidArgument, "follow_mr_geometry: empty mask");
  Mask out = pad_to_square<std::uint8_t>(aux, 0);
  for (auto& v : out) v = v ? 1 : 0;
  if (output_size > 0 && output_size != out.rows()) return resize_nearest(out, output_size, output_size);
  return out;
}

Image2D normalize_mr(const RealGrid& raw, int output_size) {
  if (raw.empty()) throw Error(ErrorCode::kInvalidArgument, "normalize_mr: empty input");
  std::vector<double> nonzero;
  for (double v : raw) {
    if (v != 0.0) nonzero.push_back(v);
  }
  if (nonzero.empty()) throw Error(ErrorCode::kInvalidArgument, "normalize_mr: all-zero input");
  const double p98 = percentile(std::move(nonzero), 98.0);
  if (!(p98 > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "normalize_mr: 98th percentile is not positive");
  }

  RealGrid scaled(raw.rows(), raw.cols());
  Mask support(raw.rows(), raw.cols());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    scaled[i] = std::clamp(raw[i], 0.0, p98) / p98;
    support[i] = scaled[i] != 0.0;
  }

  Image2D out;
  out.modality = Modality::kMRI;
  out.pixels = pad_to_square(scaled, 0.0);
  out.mask = pad_to_square<std::uint8_t>(support, 0);
  if (output_size > 0 && output_size != out.pixels.rows()) {
    out.pixels = resize_bilinear(out.pixels, output_size, output_size);
    out.mask = resize_nearest(*out.mask, output_size, output_size);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
      if (!(*out.mask)[i]) out.pixels[i] = 0.0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Histogram / Otsu
// ---------------------------------------------------------------------------

int quantize_level(double value, IntensityRange range) {
  const double t = (value - range.lo) / (range.hi - range.lo) * 255.0;
  return std::clamp(static_cast<int>(std::lround(t)), 0, 255);
}

Histogram region_histogram(const Image2D& img, const Mask& region) {
  require_same_shape(img.pixels, region, "region_histogram");
  const auto range = intensity_range(img.modality);
  Histogram hist{};
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    if (region[i]) ++hist[quantize_level(img.pixels[i], range)];
  }
  return hist;
}

int otsu_level(const Histogram& hist) {
  std::uint64_t total = 0;
  std::uint64_t weighted = 0;
  int occupied = 0;
  for (int i = 0; i < 256; ++i) {
    total += hist[i];
    weighted += hist[i] * static_cast<std::uint64_t>(i);
    occupied += hist[i] != 0;
  }
  if (occupied < 2) {
    throw Error(ErrorCode::kDegenerateHistogram, "otsu: degenerate histogram");
  }

  // Between-class variance up to the constant 1/N^2:
  //   (n1*s0 - n0*s1)^2 / (n0*n1)
  // evaluated from integer class moments so equal splits compare equal.
  std::uint64_t n0 = 0;
  std::uint64_t s0 = 0;
  long double best = -1.0L;
  int best_level = 0;
  for (int t = 0; t < 256; ++t) {
    n0 += hist[t];
    s0 += hist[t] * static_cast<std::uint64_t>(t);
    const std::uint64_t n1 = total - n0;
    const std::uint64_t s1 = weighted - s0;
    long double score = 0.0L;
    if (n0 != 0 && n1 != 0) {
      const long double diff = static_cast<long double>(n1) * s0 - static_cast<long double>(n0) * s1;
      score = diff * diff / (static_cast<long double>(n0) * n1);
    }
    if (score > best) {
      best = score;
      best_level = t;
    }
  }
  return best_level;
}

double otsu_threshold(const Image2D& img, const Mask& region) {
  const auto range = intensity_range(img.modality);
  const int level = otsu_level(region_histogram(img, region));
  return range.lo + (level + 0.5) / 255.0 * (range.hi - range.lo);
}

IntensityStats intensity_stats(const Image2D& img, const Mask& region) {
  IntensityStats stats;
  stats.histogram = region_histogram(img, region);
  stats.otsu_threshold = otsu_threshold(img, region);
  std::vector<double> values;
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    if (region[i]) values.push_back(img.pixels[i]);
  }
  stats.p98 = percentile(std::move(values), 98.0);
  return stats;
}

// ---------------------------------------------------------------------------
// Filtering
// ---------------------------------------------------------------------------

std::vector<double> gaussian_kernel(double sigma) {
  if (sigma <= 0.0) return {1.0};
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> taps(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) {
    taps[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  }
  const double sum = std::accumulate(taps.begin(), taps.end(), 0.0);
  for (double& t : taps) t /= sum;
  return taps;
}

RealGrid gaussian_blur(const RealGrid& in, double sigma) {
  if (sigma <= 0.0 || in.empty()) return in;
  const auto taps = gaussian_kernel(sigma);
  const int radius = static_cast<int>(taps.size() / 2);
  RealGrid tmp(in.rows(), in.cols());
  for (int r = 0; r < in.rows(); ++r) {
    for (int c = 0; c < in.cols(); ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) acc += taps[k + radius] * in(r, reflect101(c + k, in.cols()));
      tmp(r, c) = acc;
    }
  }
  RealGrid out(in.rows(), in.cols());
  for (int r = 0; r < in.rows(); ++r) {
    for (int c = 0; c < in.cols(); ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) acc += taps[k + radius] * tmp(reflect101(r + k, in.rows()), c);
      out(r, c) = acc;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Morphology and components
// ---------------------------------------------------------------------------

namespace {

Mask morph(const Mask& m, bool erode_op) {
  Mask out(m.rows(), m.cols());
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      bool acc = erode_op;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (!m.contains(r + dr, c + dc)) continue;
          const bool v = m(r + dr, c + dc) != 0;
          acc = erode_op ? (acc && v) : (acc || v);
        }
      }
      out(r, c) = acc;
    }
  }
  return out;
}

}  // namespace

Mask erode(const Mask& m) { return morph(m, true); }
Mask dilate(const Mask& m) { return morph(m, false); }
Mask open(const Mask& m) { return dilate(erode(m)); }
Mask close(const Mask& m) { return erode(dilate(m)); }

std::pair<Grid<int>, std::vector<std::size_t>> label_components(const Mask& m) {
  Grid<int> labels(m.rows(), m.cols(), 0);
  std::vector<std::size_t> sizes;
  std::vector<std::pair<int, int>> stack;
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      if (!m(r, c) || labels(r, c)) continue;
      const int label = static_cast<int>(sizes.size()) + 1;
      std::size_t count = 0;
      stack.assign(1, {r, c});
      labels(r, c) = label;
      while (!stack.empty()) {
        auto [y, x] = stack.back();
        stack.pop_back();
        ++count;
        constexpr int kDr[4] = {-1, 1, 0, 0};
        constexpr int kDc[4] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
          const int ny = y + kDr[k];
          const int nx = x + kDc[k];
          if (m.contains(ny, nx) && m(ny, nx) && !labels(ny, nx)) {
            labels(ny, nx) = label;
            stack.emplace_back(ny, nx);
          }
        }
      }
      sizes.push_back(count);
    }
  }
  return {std::move(labels), std::move(sizes)};
}

Mask largest_component(const Mask& m) {
  auto [labels, sizes] = label_components(m);
  Mask out(m.rows(), m.cols(), 0);
  if (sizes.empty()) return out;
  const int keep = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin()) + 1;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = labels[i] == keep;
  return out;
}

// ---------------------------------------------------------------------------
// Canny
// ---------------------------------------------------------------------------

RealGrid to_8bit_scale(const Image2D& img) {
  const auto range = intensity_range(img.modality);
  RealGrid out(img.pixels.rows(), img.pixels.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (img.pixels[i] - range.lo) / (range.hi - range.lo) * 255.0;
  }
  return out;
}

EdgeMap canny(const RealGrid& scaled, double low, double high, double sigma) {
  if (low > high) throw Error(ErrorCode::kInvalidArgument, "canny: low threshold above high");
  const int rows = scaled.rows();
  const int cols = scaled.cols();
  const RealGrid smooth = gaussian_blur(scaled, sigma);

  RealGrid gx(rows, cols), gy(rows, cols), mag(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const int rm = reflect101(r - 1, rows);
    const int rp = reflect101(r + 1, rows);
    for (int c = 0; c < cols; ++c) {
      const int cm = reflect101(c - 1, cols);
      const int cp = reflect101(c + 1, cols);
      const double dx = (smooth(rm, cp) + 2.0 * smooth(r, cp) + smooth(rp, cp)) -
                        (smooth(rm, cm) + 2.0 * smooth(r, cm) + smooth(rp, cm));
      const double dy = (smooth(rp, cm) + 2.0 * smooth(rp, c) + smooth(rp, cp)) -
                        (smooth(rm, cm) + 2.0 * smooth(rm, c) + smooth(rm, cp));
      gx(r, c) = dx;
      gy(r, c) = dy;
      mag(r, c) = std::hypot(dx, dy);
    }
  }

  // Non-maximum suppression with the asymmetric (>, >=) comparison so a
  // plateau of two equal maxima yields a single-pixel ridge.
  constexpr double kTan22 = 0.41421356237309503;  // tan(22.5 deg)
  constexpr double kTan67 = 2.414213562373095;    // tan(67.5 deg)
  Mask candidate(rows, cols, 0);
  for (int r = 1; r + 1 < rows; ++r) {
    for (int c = 1; c + 1 < cols; ++c) {
      const double m = mag(r, c);
      if (!(m > low)) continue;
      const double ax = std::abs(gx(r, c));
      const double ay = std::abs(gy(r, c));
      double prev, next;
      if (ay <= kTan22 * ax) {
        prev = mag(r, c - 1);
        next = mag(r, c + 1);
      } else if (ay > kTan67 * ax) {
        prev = mag(r - 1, c);
        next = mag(r + 1, c);
      } else if ((gx(r, c) > 0) == (gy(r, c) > 0)) {
        prev = mag(r - 1, c - 1);
        next = mag(r + 1, c + 1);
      } else {
        prev = mag(r - 1, c + 1);
        next = mag(r + 1, c - 1);
      }
      if (m > prev && m >= next) candidate(r, c) = 1;
    }
  }

  EdgeMap edges{Mask(rows, cols, 0)};
  std::vector<std::pair<int, int>> stack;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (candidate(r, c) && mag(r, c) > high && !edges.pixels(r, c)) {
        edges.pixels(r, c) = 1;
        stack.emplace_back(r, c);
      }
    }
  }
  while (!stack.empty()) {
    auto [r, c] = stack.back();
    stack.pop_back();
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const int y = r + dr;
        const int x = c + dc;
        if (candidate.contains(y, x) && candidate(y, x) && !edges.pixels(y, x)) {
          edges.pixels(y, x) = 1;
          stack.emplace_back(y, x);
        }
      }
    }
  }
  return edges;
}

EdgeMap canny_edges(const Image2D& img, const CannyOptions& options) {
  if (img.pixels.empty()) throw Error(ErrorCode::kInvalidArgument, "canny_edges: empty image");
  double reference;
  try {
    const auto range = intensity_range(img.modality);
    const double otsu = otsu_threshold(img, img.foreground());
    reference = (otsu - range.lo) / (range.hi - range.lo) * 255.0;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateHistogram || !options.fallback_threshold) throw;
    reference = *options.fallback_threshold;
    return canny(to_8bit_scale(img), reference, reference, options.sigma);
  }
  return canny(to_8bit_scale(img), options.low_fraction * reference,
               options.high_fraction * reference, options.sigma);
}

}  // namespace arepas::imgproc
