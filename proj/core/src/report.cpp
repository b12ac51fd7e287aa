#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "arepas/image_io.hpp"
#include "arepas/pipeline.hpp"

namespace arepas::pipeline {

namespace fs = std::filesystem;
using eval::AblationMode;

namespace {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
  bool markers = false;
};

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string svg_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                     const std::vector<Series>& series, double x0, double x1, double y0, double y1) {
  constexpr double W = 560, H = 420, L = 70, R = 170, T = 40, B = 60;
  const double pw = W - L - R;
  const double ph = H - T - B;
  const auto sx = [&](double x) { return L + (x - x0) / (x1 - x0) * pw; };
  const auto sy = [&](double y) { return T + ph - (y - y0) / (y1 - y0) * ph; };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << L + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  s << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = x0 + (x1 - x0) * i / 5.0;
    const double yv = y0 + (y1 - y0) * i / 5.0;
    s << "<line x1=\"" << sx(xv) << "\" y1=\"" << T + ph << "\" x2=\"" << sx(xv) << "\" y2=\"" << T + ph + 5
      << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << sx(xv) << "\" y=\"" << T + ph + 18 << "\" text-anchor=\"middle\">" << num(xv) << "</text>\n";
    s << "<line x1=\"" << L - 5 << "\" y1=\"" << sy(yv) << "\" x2=\"" << L << "\" y2=\"" << sy(yv)
      << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << L - 8 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\">" << num(yv) << "</text>\n";
  }
  s << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  s << "<text x=\"18\" y=\"" << T + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << T + ph / 2
    << ")\">" << ylabel << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kPalette[k % std::size(kPalette)];
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (const auto& [x, y] : series[k].points) s << sx(x) << ',' << sy(y) << ' ';
    s << "\"/>\n";
    if (series[k].markers) {
      for (const auto& [x, y] : series[k].points) {
        s << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"3.5\" fill=\"" << color << "\"/>\n";
      }
    }
    const double ly = T + 12 + 18.0 * k;
    s << "<line x1=\"" << L + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << L + pw + 32 << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << L + pw + 38 << "\" y=\"" << ly + 4 << "\">" << series[k].name << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + p.string());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

io::Rgb blend(io::Rgb base, io::Rgb over, double alpha) {
  io::Rgb out;
  for (int c = 0; c < 3; ++c) out[c] = static_cast<std::uint8_t>(std::lround((1.0 - alpha) * base[c] + alpha * over[c]));
  return out;
}

Grid<io::Rgb> gray_canvas(const Image2D& img) {
  const auto range = intensity_range(img.modality);
  const auto g = io::to_gray8(img.pixels, range.lo, range.hi);
  Grid<io::Rgb> out(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = {g[i], g[i], g[i]};
  return out;
}

bool on_boundary(const Mask& m, int r, int c) {
  if (!m(r, c)) return false;
  const int dr[] = {-1, 1, 0, 0};
  const int dc[] = {0, 0, -1, 1};
  for (int k = 0; k < 4; ++k) {
    if (!m.contains(r + dr[k], c + dc[k]) || !m(r + dr[k], c + dc[k])) return true;
  }
  return false;
}

// Keeps at most `n` points, always including both ends.
std::vector<std::pair<double, double>> thin(const std::vector<std::pair<double, double>>& pts, std::size_t n) {
  if (pts.size() <= n) return pts;
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(pts[i * (pts.size() - 1) / (n - 1)]);
  return out;
}

}  // namespace

void Run::report() {
  require(metrics_table(), "evaluation results (run 'evaluate' first)");
  const auto rows = collect_rows();
  if (rows.empty()) throw Error(ErrorCode::kMissingPrerequisite, "no evaluation results to report");
  const fs::path out = report_dir();
  claim(out / "index.md", false);

  // PR curves of every evaluated variant on the pooled test pixels.
  std::vector<Series> pr_series;
  std::map<std::string, std::map<std::string, double>> dice_by_image;  // id -> tag -> dice
  std::vector<std::string> tags;
  for (const auto& row : rows) {
    const int s = row.patch_size.value_or(cfg_.siamese.patch_size);
    const std::string t = tag(row.mode, s);
    tags.push_back(t);
    require(infer_dir(row.mode, s) / "index.csv", "inference output for " + t);
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    std::size_t k = 0;
    for (const auto& smp : samples()) {
      if (smp.split != data::Split::kTest) continue;
      const RealGrid fm = io::read_pfm(infer_dir(row.mode, s) / (smp.id + "_final.pfm"));
      const Mask region = smp.image->foreground();
      for (std::size_t i = 0; i < fm.size(); ++i) {
        if (cfg_.eval.auprc_foreground_only && !region[i]) continue;
        scores.push_back(fm[i]);
        labels.push_back((*smp.gt)[i]);
      }
      if (k < row.result.per_image_dice.size()) dice_by_image[smp.id][t] = row.result.per_image_dice[k];
      ++k;
    }
    auto curve = eval::pr_curve(scores, labels);
    if (curve.back().threshold > 0.0) curve.push_back({0.0, curve.back().precision, curve.back().recall});
    std::string csv = "threshold,precision,recall\n";
    std::vector<std::pair<double, double>> pts{{0.0, curve.front().precision}};
    for (const auto& p : curve) {
      char line[96];
      std::snprintf(line, sizeof line, "%.9g,%.9g,%.9g\n", p.threshold, p.precision, p.recall);
      csv += line;
      pts.emplace_back(p.recall, p.precision);
    }
    write_file(out / ("pr_" + t + ".csv"), csv);
    record("report", out / ("pr_" + t + ".csv"));
    pr_series.push_back({t + " (AUPRC " + num(row.result.auprc) + ")", thin(pts, 400)});
  }
  write_file(out / "pr_curve.svg", svg_plot("Precision-recall (test pixels)", "recall", "precision", pr_series, 0, 1, 0, 1));
  record("report", out / "pr_curve.svg");

  // Patch-size curve from the FULL rows.
  std::vector<std::pair<double, double>> sweep;
  for (const auto& row : rows) {
    if (row.mode == AblationMode::kFull && row.patch_size) sweep.emplace_back(*row.patch_size, row.result.dice);
  }
  const bool have_sweep = sweep.size() > 1;
  if (have_sweep) {
    double lo = sweep.front().first;
    double hi = sweep.back().first;
    write_file(out / "patch_size.svg",
               svg_plot("DICE vs patch size", "patch size (px)", "test DICE", {{"FULL", sweep, true}}, lo, hi, 0, 1));
    record("report", out / "patch_size.svg");
  }

  // Overlays of the primary variant: FULL at the configured patch size when
  // evaluated, otherwise the first row.
  const MetricRow* primary = &rows.front();
  for (const auto& row : rows) {
    if (row.mode == AblationMode::kFull && row.patch_size == cfg_.siamese.patch_size) primary = &row;
  }
  const int ps = primary->patch_size.value_or(cfg_.siamese.patch_size);
  const fs::path src = infer_dir(primary->mode, ps);
  std::vector<std::string> ids;
  for (const auto& smp : samples()) {
    if (smp.split != data::Split::kTest) continue;
    ids.push_back(smp.id);
    const RealGrid fm = io::read_pfm(src / (smp.id + "_final.pfm"));
    const Grid<io::Rgb> base = gray_canvas(*smp.image);
    Grid<io::Rgb> final_overlay = base;
    for (int r = 0; r < fm.rows(); ++r) {
      for (int c = 0; c < fm.cols(); ++c) {
        if (fm(r, c) > primary->result.threshold) final_overlay(r, c) = blend(base(r, c), {255, 0, 0}, 0.6);
        if (on_boundary(*smp.gt, r, c)) final_overlay(r, c) = {0, 255, 0};
      }
    }
    io::write_ppm(out / "overlays" / (smp.id + "_final.ppm"), final_overlay);
    record("report", out / "overlays" / (smp.id + "_final.ppm"));
    const fs::path heat_path = src / (smp.id + "_heat.pfm");
    if (fs::exists(heat_path)) {
      const RealGrid heat = io::read_pfm(heat_path);
      Grid<io::Rgb> heat_overlay = base;
      for (std::size_t i = 0; i < heat.size(); ++i) {
        heat_overlay[i] = blend(base[i], {255, 64, 0}, 0.7 * std::clamp(heat[i], 0.0, 1.0));
      }
      io::write_ppm(out / "overlays" / (smp.id + "_heat.ppm"), heat_overlay);
      record("report", out / "overlays" / (smp.id + "_heat.ppm"));
    }
  }

  write_file(out / "metrics.csv", slurp(metrics_table()));
  record("report", out / "metrics.csv");

  std::ostringstream md;
  md << "# Run report\n\n## Metrics (test split, threshold selected on validation)\n\n";
  md << "| mode | patch size | DICE | DICE s.e. | DICE 95% CI | precision | recall | AUPRC | threshold |\n";
  md << "|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& row : rows) {
    const auto& r = row.result;
    md << "| " << eval::ablation_mode_name(row.mode) << " | " << (row.patch_size ? std::to_string(*row.patch_size) : "-")
       << " | " << num(r.dice) << " | " << num(r.dice_stderr) << " | [" << num(r.dice_ci_low) << ", "
       << num(r.dice_ci_high) << "] | " << num(r.precision) << " | " << num(r.recall) << " | " << num(r.auprc)
       << " | " << num(r.threshold) << " |\n";
  }
  md << "\n## Figures\n\n![PR curves](pr_curve.svg)\n\n";
  if (have_sweep) md << "![Patch-size sweep](patch_size.svg)\n\n";
  md << "## Test images\n\nOverlays show " << tag(primary->mode, ps)
     << ": predicted pixels in red, ground-truth boundary in green.\n\n| image | ";
  for (const auto& t : tags) md << t << " DICE | ";
  md << "overlays |\n|---|";
  for (std::size_t i = 0; i < tags.size(); ++i) md << "---|";
  md << "---|\n";
  for (const auto& id : ids) {
    md << "| " << id << " | ";
    for (const auto& t : tags) {
      const auto it = dice_by_image[id].find(t);
      md << (it == dice_by_image[id].end() ? std::string("-") : num(it->second)) << " | ";
    }
    md << "[final](overlays/" << id << "_final.ppm)";
    if (fs::exists(out / "overlays" / (id + "_heat.ppm"))) md << ", [heat](overlays/" << id << "_heat.ppm)";
    md << " |\n";
  }
  write_file(out / "index.md", md.str());
  record("report", out / "index.md");
  log("report: " + out.string());
}

}  // namespace arepas::pipeline
