#include "arepas/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "arepas/image_io.hpp"
#include "arepas/imgproc.hpp"

namespace arepas::synth {

namespace fs = std::filesystem;

void validate(const SynthConfig& cfg) {
  const auto bad = [](const std::string& msg) { return Error(ErrorCode::kConfig, "synth config: " + msg); };
  if (cfg.image_size < 32) throw bad("image_size must be >= 32");
  if (cfg.n_normal < 0 || cfg.n_val < 0 || cfg.n_test < 0) throw bad("image counts must be >= 0");
  if (cfg.vessel_count.lo < 0 || cfg.vessel_count.hi < cfg.vessel_count.lo) throw bad("bad vessel_count range");
  if (!(cfg.vessel_width.lo > 0.0) || cfg.vessel_width.hi < cfg.vessel_width.lo) throw bad("bad vessel_width range");
  if (cfg.vessel_intensity.hi < cfg.vessel_intensity.lo) throw bad("bad vessel_intensity range");
  if (!(cfg.anomaly_area_frac.lo > 0.0) || !(cfg.anomaly_area_frac.hi < 0.5) ||
      cfg.anomaly_area_frac.hi < cfg.anomaly_area_frac.lo) {
    throw bad("anomaly_area_frac must lie within (0, 0.5)");
  }
  if (cfg.anomaly_blobs.lo < 0 || cfg.anomaly_blobs.hi < cfg.anomaly_blobs.lo) throw bad("bad anomaly_blobs range");
  if (cfg.anomaly_intensity_shift.hi < cfg.anomaly_intensity_shift.lo) throw bad("bad anomaly_intensity_shift");
  if (cfg.base_level < -1.0 || cfg.base_level > 1.0 || cfg.texture_amplitude < 0.0) {
    throw bad("base_level must lie in [-1, 1] and texture_amplitude be >= 0");
  }
}

namespace {

double uniform(Rng& rng, Range r) { return std::uniform_real_distribution<double>(r.lo, r.hi)(rng); }
double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
int uniform(Rng& rng, IntRange r) { return std::uniform_int_distribution<int>(r.lo, r.hi)(rng); }

struct Segment {
  double y0, x0, y1, x1;
  double sigma;
  double amplitude;
};

double segment_distance(const Segment& s, double y, double x) {
  const double dy = s.y1 - s.y0;
  const double dx = s.x1 - s.x0;
  const double len2 = dy * dy + dx * dx;
  double t = len2 > 0.0 ? ((y - s.y0) * dy + (x - s.x0) * dx) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(y - (s.y0 + t * dy), x - (s.x0 + t * dx));
}

void render(RealGrid& canvas, const Segment& s) {
  const double reach = 3.0 * s.sigma + 1.0;
  const int r0 = std::max(0, static_cast<int>(std::floor(std::min(s.y0, s.y1) - reach)));
  const int r1 = std::min(canvas.rows() - 1, static_cast<int>(std::ceil(std::max(s.y0, s.y1) + reach)));
  const int c0 = std::max(0, static_cast<int>(std::floor(std::min(s.x0, s.x1) - reach)));
  const int c1 = std::min(canvas.cols() - 1, static_cast<int>(std::ceil(std::max(s.x0, s.x1) + reach)));
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const double d = segment_distance(s, r, c);
      canvas(r, c) = std::max(canvas(r, c), s.amplitude * std::exp(-d * d / (2.0 * s.sigma * s.sigma)));
    }
  }
}

struct Walker {
  double y, x, heading;
  double sigma, amplitude;
  int steps;
  int depth;
};

constexpr double kStep = 1.5;
constexpr double kTurnSigma = 0.2;
constexpr double kBranchProbability = 0.05;
constexpr int kMaxDepth = 2;

void grow_tree(RealGrid& canvas, const Mask& fg, Rng& rng, Walker root) {
  std::normal_distribution<double> turn(0.0, kTurnSigma);
  std::bernoulli_distribution branch(kBranchProbability);
  std::vector<Walker> stack{root};
  while (!stack.empty()) {
    Walker w = stack.back();
    stack.pop_back();
    for (int i = 0; i < w.steps; ++i) {
      w.heading += turn(rng);
      const double ny = w.y + kStep * std::sin(w.heading);
      const double nx = w.x + kStep * std::cos(w.heading);
      const int ry = static_cast<int>(std::lround(ny));
      const int rx = static_cast<int>(std::lround(nx));
      if (!fg.contains(ry, rx) || !fg(ry, rx)) break;
      render(canvas, {w.y, w.x, ny, nx, w.sigma, w.amplitude});
      w.y = ny;
      w.x = nx;
      if (w.depth < kMaxDepth && branch(rng)) {
        const double side = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
        stack.push_back({w.y, w.x, w.heading + side * uniform(rng, 0.4, 0.9), w.sigma * 0.75, w.amplitude * 0.85,
                         std::max(4, (w.steps - i) * 3 / 4), w.depth + 1});
      }
    }
  }
}

std::pair<int, int> random_point(const Mask& m, Rng& rng) {
  std::vector<std::pair<int, int>> pts;
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      if (m(r, c)) pts.emplace_back(r, c);
    }
  }
  if (pts.empty()) throw Error(ErrorCode::kNoForeground, "synth: empty foreground");
  return pts[std::uniform_int_distribution<std::size_t>(0, pts.size() - 1)(rng)];
}

}  // namespace

Image2D gen_normal(Rng& rng, const SynthConfig& cfg) {
  validate(cfg);
  const int n = cfg.image_size;
  const double cy = (n - 1) / 2.0 + uniform(rng, -1.5, 1.5);
  const double cx = (n - 1) / 2.0 + uniform(rng, -1.5, 1.5);
  const double ay = uniform(rng, 0.40, 0.46) * n;
  const double ax = uniform(rng, 0.40, 0.46) * n;
  const double tilt = uniform(rng, -0.3, 0.3);

  Mask fg(n, n, 0);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const double y = r - cy;
      const double x = c - cx;
      const double u = std::cos(tilt) * y + std::sin(tilt) * x;
      const double v = -std::sin(tilt) * y + std::cos(tilt) * x;
      fg(r, c) = (u * u) / (ay * ay) + (v * v) / (ax * ax) <= 1.0;
    }
  }

  RealGrid noise(n, n);
  for (auto& v : noise) v = uniform(rng, -1.0, 1.0);
  noise = imgproc::gaussian_blur(noise, 2.5);
  double ss = 0.0;
  for (double v : noise) ss += v * v;
  const double rms = std::sqrt(ss / static_cast<double>(noise.size()));

  RealGrid vessels(n, n, 0.0);
  const Mask interior = imgproc::erode(imgproc::erode(fg));
  const int trees = uniform(rng, cfg.vessel_count);
  for (int t = 0; t < trees; ++t) {
    const auto [y, x] = random_point(interior, rng);
    grow_tree(vessels, fg, rng,
              {static_cast<double>(y), static_cast<double>(x), uniform(rng, 0.0, 2.0 * std::numbers::pi),
               uniform(rng, cfg.vessel_width), uniform(rng, cfg.vessel_intensity), std::uniform_int_distribution(15, 35)(rng),
               0});
  }

  Image2D img;
  img.modality = Modality::kSynth;
  img.pixels = RealGrid(n, n, 0.0);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    if (!fg[i]) continue;
    const double texture = rms > 0.0 ? cfg.texture_amplitude * noise[i] / rms : 0.0;
    img.pixels[i] = std::clamp(cfg.base_level + texture + vessels[i], -1.0, 1.0);
  }
  img.mask = std::move(fg);
  return img;
}

namespace {

constexpr double kBlobSoftness = 1.5;
constexpr int kBlobAttempts = 100;

struct Blob {
  Mask mask;      // centred on the canvas
  RealGrid soft;  // blurred indicator, same canvas
  int area = 0;
};

Blob rasterize_blob(int n, double r0, const std::array<double, 6>& harmonics) {
  const double c = (n - 1) / 2.0;
  RealGrid ind(n, n, 0.0);
  for (int r = 0; r < n; ++r) {
    for (int col = 0; col < n; ++col) {
      const double y = r - c;
      const double x = col - c;
      const double theta = std::atan2(y, x);
      double radius = r0;
      for (int k = 0; k < 3; ++k) radius += r0 * harmonics[2 * k] * std::cos((k + 1) * theta - harmonics[2 * k + 1]);
      ind(r, col) = std::hypot(y, x) <= radius ? 1.0 : 0.0;
    }
  }
  Blob b{Mask(n, n, 0), imgproc::gaussian_blur(ind, kBlobSoftness), 0};
  for (std::size_t i = 0; i < b.soft.size(); ++i) {
    b.mask[i] = b.soft[i] > 0.5;
    b.area += b.mask[i];
  }
  return b;
}

// Blob whose area is as close as the radius bisection gets to `target`.
Blob blob_with_area(int n, double target, Rng& rng) {
  std::array<double, 6> h{};
  const double amp[3] = {0.18, 0.12, 0.08};
  for (int k = 0; k < 3; ++k) {
    h[2 * k] = uniform(rng, 0.0, amp[k]);
    h[2 * k + 1] = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  }
  double lo = 0.5;
  double hi = n / 2.0;
  for (int it = 0; it < 30; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (rasterize_blob(n, mid, h).area < target) lo = mid;
    else hi = mid;
  }
  Blob a = rasterize_blob(n, lo, h);
  Blob b = rasterize_blob(n, hi, h);
  return std::abs(a.area - target) <= std::abs(b.area - target) ? a : b;
}

}  // namespace

Injected inject_anomaly(const Image2D& img, Rng& rng, const SynthConfig& cfg, std::optional<int> blob_count) {
  validate(cfg);
  validate_image(img);
  const int n = img.pixels.rows();
  const Mask fg = img.foreground();
  const Mask allowed = imgproc::erode(fg);
  const int blobs = blob_count ? *blob_count : uniform(rng, cfg.anomaly_blobs);
  if (blobs < 0) throw Error(ErrorCode::kInvalidArgument, "inject_anomaly: negative blob count");

  Injected out{img, Mask(n, n, 0), {}};
  const double total = static_cast<double>(n) * n;
  for (int b = 0; b < blobs; ++b) {
    bool placed = false;
    for (int attempt = 0; attempt < kBlobAttempts && !placed; ++attempt) {
      const double frac = uniform(rng, cfg.anomaly_area_frac);
      const Blob blob = blob_with_area(n, frac * total, rng);
      const double got = blob.area / total;
      if (got < cfg.anomaly_area_frac.lo || got > cfg.anomaly_area_frac.hi) continue;

      std::vector<std::pair<int, int>> cells;
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
          if (blob.mask(r, c)) cells.emplace_back(r, c);
        }
      }
      std::vector<std::pair<int, int>> offsets;
      for (int dy = -n; dy < n; ++dy) {
        for (int dx = -n; dx < n; ++dx) {
          const bool inside = std::all_of(cells.begin(), cells.end(), [&](auto p) {
            return allowed.contains(p.first + dy, p.second + dx) && allowed(p.first + dy, p.second + dx);
          });
          if (inside) offsets.emplace_back(dy, dx);
        }
      }
      if (offsets.empty()) continue;
      const auto [dy, dx] = offsets[std::uniform_int_distribution<std::size_t>(0, offsets.size() - 1)(rng)];
      const double shift = uniform(rng, cfg.anomaly_intensity_shift);
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
          const int sr = r - dy;
          const int sc = c - dx;
          if (!blob.soft.contains(sr, sc) || !fg(r, c)) continue;
          out.image.pixels(r, c) = std::clamp(out.image.pixels(r, c) + shift * blob.soft(sr, sc), -1.0, 1.0);
          if (blob.mask(sr, sc)) out.gt(r, c) = 1;
        }
      }
      out.blob_area_fractions.push_back(got);
      placed = true;
    }
    if (!placed) throw Error(ErrorCode::kInvalidArgument, "inject_anomaly: no blob fits inside the foreground");
  }
  return out;
}

data::DatasetManifest gen_dataset(const SynthConfig& cfg, const fs::path& out_dir) {
  validate(cfg);
  struct Item {
    std::string id;
    data::Split split;
    std::uint64_t stream;
  };
  std::vector<Item> items;
  const auto add = [&](const char* prefix, data::Split split, int count, std::uint64_t code) {
    for (int i = 0; i < count; ++i) {
      char id[32];
      std::snprintf(id, sizeof id, "%s_%04d", prefix, i);
      items.push_back({id, split, (code << 32) | static_cast<std::uint64_t>(i)});
    }
  };
  add("normal", data::Split::kTrain, cfg.n_normal, 1);
  add("val", data::Split::kVal, cfg.n_val, 2);
  add("test", data::Split::kTest, cfg.n_test, 3);

  const fs::path manifest_path = out_dir / "manifest.csv";
  std::vector<fs::path> targets{manifest_path};
  for (const auto& it : items) {
    targets.push_back(out_dir / "images" / (it.id + ".pfm"));
    targets.push_back(out_dir / "masks" / (it.id + ".pgm"));
    if (it.split != data::Split::kTrain) targets.push_back(out_dir / "gt" / (it.id + ".pgm"));
  }
  for (const auto& t : targets) {
    if (fs::exists(t)) throw Error(ErrorCode::kPathCollision, "refusing to overwrite " + t.string());
  }

  data::DatasetManifest manifest;
  for (const auto& it : items) {
    Rng rng = derive_rng(cfg.seed, it.stream);
    Image2D img = gen_normal(rng, cfg);
    data::ManifestRecord rec{it.id, it.split, out_dir / "images" / (it.id + ".pfm"),
                             out_dir / "masks" / (it.id + ".pgm"), std::nullopt};
    if (it.split != data::Split::kTrain) {
      auto inj = inject_anomaly(img, rng, cfg);
      rec.gt_path = out_dir / "gt" / (it.id + ".pgm");
      io::write_mask(*rec.gt_path, inj.gt);
      img = std::move(inj.image);
    }
    io::write_pfm(rec.image_path, img.pixels);
    io::write_mask(*rec.mask_path, *img.mask);
    manifest.records.push_back(std::move(rec));
  }
  data::write_manifest(manifest_path, manifest);
  return manifest;
}

}  // namespace arepas::synth
