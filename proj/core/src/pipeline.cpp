#include "arepas/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "arepas/anomaly_infer.hpp"
#include "arepas/edge_augment.hpp"
#include "arepas/image_io.hpp"
#include "arepas/imgproc.hpp"
#include "arepas/patch_siamese.hpp"
#include "arepas/recon_gan.hpp"
#include "arepas/synthdata.hpp"
#include "json.hpp"

namespace arepas::pipeline {

namespace fs = std::filesystem;
using eval::AblationMode;
using nlohmann::json;

torch::Device resolve_device(DeviceKind kind) {
  if (kind == DeviceKind::kCpu) return torch::kCPU;
  if (torch::cuda::is_available()) return torch::kCUDA;
  throw Error(ErrorCode::kDevice, "accelerator requested but no CUDA device is available");
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + p.string());
}

bool uses_scorer(AblationMode m) { return m == AblationMode::kFull; }
bool uses_augmentation(AblationMode m) { return m != AblationMode::kNoPatchScoringNoAug; }

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace

std::string format_metric_table(const std::vector<MetricRow>& rows) {
  std::string out(kMetricHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += std::string(eval::ablation_mode_name(r.mode)) + ',' +
           (r.patch_size ? std::to_string(*r.patch_size) : std::string()) + ',' + fmt(r.result.dice) + ',' +
           fmt(r.result.dice_stderr) + ',' + fmt(r.result.precision) + ',' + fmt(r.result.recall) + ',' +
           fmt(r.result.auprc) + ',' + fmt(r.result.threshold) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Run directory bookkeeping
// ---------------------------------------------------------------------------

Run::Run(ExperimentConfig cfg, RunOptions options) : cfg_(std::move(cfg)), opts_(std::move(options)) {
  validate(cfg_);
  if (opts_.run_dir.empty()) throw Error(ErrorCode::kConfig, "no run directory given");
  const fs::path cfg_path = opts_.run_dir / "config.json";
  const std::string text = serialize_config(cfg_);
  if (fs::exists(cfg_path)) {
    if (read_text(cfg_path) != text) {
      if (!opts_.overwrite) {
        throw Error(ErrorCode::kConfig, "run directory " + opts_.run_dir.string() +
                                            " was created with a different config (use --overwrite or a new run dir)");
      }
      write_text(cfg_path, text);
    }
  } else {
    fs::create_directories(opts_.run_dir);
    write_text(cfg_path, text);
    record("config", cfg_path);
  }
}

Run Run::open(RunOptions options) {
  const fs::path cfg_path = options.run_dir / "config.json";
  if (!fs::exists(cfg_path)) {
    throw Error(ErrorCode::kMissingPrerequisite, "no config.json in run directory " + options.run_dir.string());
  }
  return Run(load_config(cfg_path), std::move(options));
}

fs::path Run::preprocessed_manifest() const { return dir() / "preprocessed" / "manifest.csv"; }
fs::path Run::recon_checkpoint(bool augmented) const {
  return dir() / "recon" / (augmented ? "augmented.ckpt" : "plain.ckpt");
}
fs::path Run::scorer_checkpoint(int s) const { return dir() / "scorer" / ("patch_" + std::to_string(s) + ".ckpt"); }
fs::path Run::infer_dir(AblationMode m, int s) const { return dir() / "infer" / tag(m, s); }
fs::path Run::eval_file(AblationMode m, int s) const { return dir() / "eval" / (tag(m, s) + ".json"); }
fs::path Run::metrics_table() const { return dir() / "eval" / "metrics.csv"; }
fs::path Run::ablation_table() const { return dir() / "eval" / "ablation.csv"; }
fs::path Run::sweep_table() const { return dir() / "eval" / "patch_sweep.csv"; }
fs::path Run::report_dir() const { return dir() / "report"; }

std::string Run::tag(AblationMode m, int s) {
  std::string t(eval::ablation_mode_name(m));
  if (uses_scorer(m)) t += "_s" + std::to_string(s);
  return t;
}

void Run::log(const std::string& msg) const {
  if (opts_.log) opts_.log(msg);
}

void Run::record(const std::string& stage, const fs::path& file) const {
  const fs::path list = dir() / "artifacts.csv";
  const bool fresh = !fs::exists(list);
  std::ofstream out(list, std::ios::app);
  if (fresh) out << "stage,path\n";
  out << stage << ',' << fs::relative(file, dir()).generic_string() << '\n';
  if (!out) throw Error(ErrorCode::kIo, "cannot append to " + list.string());
}

bool Run::claim(const fs::path& output, bool reuse) const {
  if (!fs::exists(output)) return true;
  if (reuse) return false;
  if (opts_.overwrite) return true;
  throw Error(ErrorCode::kPathCollision,
              output.string() + " already exists (run directories are append-only; use --overwrite)");
}

void Run::require(const fs::path& prerequisite, const std::string& what) const {
  if (!fs::exists(prerequisite)) {
    throw Error(ErrorCode::kMissingPrerequisite, what + " missing: " + prerequisite.string());
  }
}

// ---------------------------------------------------------------------------
// Data stages
// ---------------------------------------------------------------------------

fs::path Run::synth_generate() {
  const fs::path out = dir() / "data";
  const fs::path manifest = out / "manifest.csv";
  claim(manifest, false);
  if (fs::exists(out) && opts_.overwrite) fs::remove_all(out);
  Timer t;
  const auto m = synth::gen_dataset(cfg_.synth, out);
  for (const auto& r : m.records) {
    record("synth-generate", r.image_path);
    if (r.mask_path) record("synth-generate", *r.mask_path);
    if (r.gt_path) record("synth-generate", *r.gt_path);
  }
  record("synth-generate", manifest);
  log("synth-generate: " + std::to_string(m.records.size()) + " images in " + fmt(t.seconds()) + " s");
  return manifest;
}

void Run::preprocess(const fs::path& manifest_path) {
  require(manifest_path, "dataset manifest");
  const fs::path out = dir() / "preprocessed";
  claim(preprocessed_manifest(), false);
  if (fs::exists(out) && opts_.overwrite) fs::remove_all(out);
  const auto in = data::read_manifest(manifest_path);
  const int size = cfg_.image_size;

  data::DatasetManifest result;
  for (const auto& r : in.records) {
    const RealGrid raw = io::read_pfm(r.image_path);
    std::optional<Mask> mask;
    if (r.mask_path) mask = io::read_mask(*r.mask_path);
    std::optional<Mask> gt;
    if (r.gt_path) gt = io::read_mask(*r.gt_path);

    Image2D img;
    switch (cfg_.modality) {
      case Modality::kCT:
        if (!mask) throw Error(ErrorCode::kManifest, r.image_id + ": CT records need a lung mask");
        img = imgproc::normalize_ct(raw, *mask, size);
        if (gt) gt = imgproc::follow_ct_geometry(*gt, *mask, size);
        break;
      case Modality::kMRI:
        img = imgproc::normalize_mr(raw, size);
        if (gt) gt = imgproc::follow_mr_geometry(*gt, size);
        break;
      case Modality::kSynth: {
        img.modality = Modality::kSynth;
        img.pixels = imgproc::pad_to_square(raw, 0.0);
        Mask m = mask ? imgproc::pad_to_square<std::uint8_t>(*mask, 0) : Mask(img.pixels.rows(), img.pixels.cols(), 1);
        if (img.pixels.rows() != size) {
          img.pixels = imgproc::resize_bilinear(img.pixels, size, size);
          m = imgproc::resize_nearest(m, size, size);
        }
        for (std::size_t i = 0; i < m.size(); ++i) {
          m[i] = m[i] ? 1 : 0;
          if (!m[i]) img.pixels[i] = 0.0;
        }
        img.mask = std::move(m);
        if (gt) gt = imgproc::follow_mr_geometry(*gt, size);
        break;
      }
    }
    try {
      validate_image(img);
    } catch (const Error& e) {
      throw Error(e.code(), r.image_id + ": " + e.what());
    }
    data::ManifestRecord rec{r.image_id, r.split, out / "images" / (r.image_id + ".pfm"),
                             out / "masks" / (r.image_id + ".pgm"), std::nullopt};
    io::write_pfm(rec.image_path, img.pixels);
    io::write_mask(*rec.mask_path, *img.mask);
    record("preprocess", rec.image_path);
    record("preprocess", *rec.mask_path);
    if (gt) {
      for (std::size_t i = 0; i < gt->size(); ++i) (*gt)[i] = (*gt)[i] && (*img.mask)[i];
      rec.gt_path = out / "gt" / (r.image_id + ".pgm");
      io::write_mask(*rec.gt_path, *gt);
      record("preprocess", *rec.gt_path);
    }
    result.records.push_back(std::move(rec));
  }
  data::write_manifest(preprocessed_manifest(), result);
  record("preprocess", preprocessed_manifest());
  samples_.reset();
  rec_cache_.clear();
  log("preprocess: " + std::to_string(result.records.size()) + " records");
}

std::vector<Sample> Run::load_samples() const {
  require(preprocessed_manifest(), "preprocessed dataset (run 'preprocess' first)");
  const auto m = data::read_manifest(preprocessed_manifest());
  std::vector<Sample> out;
  for (const auto& r : m.records) {
    auto img = std::make_shared<Image2D>();
    img->modality = cfg_.modality;
    img->pixels = io::read_pfm(r.image_path);
    img->mask = r.mask_path ? io::read_mask(*r.mask_path) : Mask(img->pixels.rows(), img->pixels.cols(), 1);
    validate_image(*img);
    if (img->pixels.rows() != cfg_.image_size) {
      throw Error(ErrorCode::kShapeMismatch, r.image_id + ": preprocessed size differs from image_size");
    }
    Sample s{r.image_id, r.split, std::move(img), std::nullopt};
    if (r.gt_path) s.gt = io::read_mask(*r.gt_path);
    out.push_back(std::move(s));
  }
  return out;
}

const std::vector<Sample>& Run::samples() {
  if (!samples_) samples_ = load_samples();
  return *samples_;
}

// ---------------------------------------------------------------------------
// Training stages
// ---------------------------------------------------------------------------

void Run::train_recon(bool augmented, bool reuse) {
  const fs::path ckpt_path = recon_checkpoint(augmented);
  if (!claim(ckpt_path, reuse)) return;
  const auto& all = samples();
  std::vector<std::size_t> normals;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].split == data::Split::kTrain) normals.push_back(i);
  }
  if (normals.empty()) throw Error(ErrorCode::kManifest, "no train images in the preprocessed manifest");

  // Held-out normals only feed the per-epoch validation L1.
  std::vector<std::size_t> order = normals;
  Rng split_rng = derive_rng(cfg_.seed, 0x52564cULL);
  std::shuffle(order.begin(), order.end(), split_rng);
  std::size_t n_val = 0;
  if (order.size() > 1 && cfg_.recon_validation_fraction > 0.0) {
    n_val = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::lround(cfg_.recon_validation_fraction * static_cast<double>(order.size()))), 1,
        order.size() - 1);
  }
  std::vector<std::size_t> train(order.begin() + static_cast<long>(n_val), order.end());
  std::sort(train.begin(), train.end());

  augment::AugmentSpec spec = cfg_.augment;
  if (!augmented) spec.max_copy_paste_ops = 0;
  std::vector<augment::TrainingPair> pairs;
  for (std::size_t i : train) {
    Rng rng = derive_rng(cfg_.seed, 0x41554700000000ULL + i);
    auto p = augment::build_training_pairs(all[i].image, spec, cfg_.canny, rng);
    std::move(p.begin(), p.end(), std::back_inserter(pairs));
  }

  recon::ReconTrainOptions opts;
  opts.generator_spec = cfg_.generator;
  opts.discriminator_spec = cfg_.discriminator;
  opts.config = cfg_.recon;
  opts.canny = cfg_.canny;
  opts.device = opts_.device;
  for (std::size_t k = 0; k < n_val; ++k) opts.validation.push_back(all[order[k]].image);
  opts.dump_dir = dir() / "recon";
  if (cfg_.recon.use_perceptual) {
    if (cfg_.recon.perceptual_weights.empty() || !fs::exists(cfg_.recon.perceptual_weights)) {
      throw Error(ErrorCode::kMissingPrerequisite,
                  "perceptual loss enabled but recon.perceptual_weights does not name an existing file");
    }
    opts.extractor = recon::load_vgg19_extractor(cfg_.recon.perceptual_weights);
  }
  const std::string stage = augmented ? "train-recon" : "train-recon --no-augment";
  Timer t;
  opts.on_epoch = [&](const recon::EpochLog& e) {
    log(stage + ": epoch " + std::to_string(e.epoch) + " g_total " + fmt(e.mean.total) + " l1 " + fmt(e.mean.l1) +
        " d_total " + fmt(e.mean.d_total) + " val_l1 " + fmt(e.val_l1_mean) + " (" + fmt(t.seconds()) + " s)");
  };
  log(stage + ": " + std::to_string(pairs.size()) + " pairs from " + std::to_string(train.size()) + " images");
  const auto ckpt = recon::train_reconstructor(pairs, opts);
  recon::save_checkpoint(ckpt, ckpt_path);
  record(stage, ckpt_path);
  rec_cache_.erase({augmented, data::Split::kTrain});
  rec_cache_.erase({augmented, data::Split::kVal});
  rec_cache_.erase({augmented, data::Split::kTest});
}

const std::vector<Image2D>& Run::reconstructions(bool augmented, data::Split split) {
  const auto key = std::make_pair(augmented, split);
  if (auto it = rec_cache_.find(key); it != rec_cache_.end()) return it->second;
  require(recon_checkpoint(augmented), augmented ? "reconstructor checkpoint (run 'train-recon' first)"
                                                 : "plain reconstructor checkpoint (run 'train-recon --no-augment')");
  const auto ckpt = recon::load_checkpoint(recon_checkpoint(augmented));
  if (opts_.device != torch::kCPU) ckpt.generator.ptr()->to(opts_.device);
  std::vector<Image2D> recs;
  for (const auto& s : samples()) {
    if (s.split == split) recs.push_back(recon::reconstruct(*s.image, ckpt));
  }
  return rec_cache_[key] = std::move(recs);
}

void Run::train_scorer(int patch_size, bool reuse) {
  const fs::path ckpt_path = scorer_checkpoint(patch_size);
  require(recon_checkpoint(true), "reconstructor checkpoint (run 'train-recon' first)");
  if (!claim(ckpt_path, reuse)) return;
  std::vector<const Sample*> normals;
  for (const auto& s : samples()) {
    if (s.split == data::Split::kTrain) normals.push_back(&s);
  }
  const auto& recs = reconstructions(true, data::Split::kTrain);
  std::vector<siamese::ImagePair> pairs;
  for (std::size_t i = 0; i < normals.size(); ++i) pairs.push_back({normals[i]->image.get(), &recs[i]});

  siamese::ScorerTrainOptions opts;
  opts.spec = cfg_.siamese;
  opts.spec.patch_size = patch_size;
  opts.config = cfg_.scorer;
  opts.device = opts_.device;
  const std::string stage = "train-scorer s=" + std::to_string(patch_size);
  Timer t;
  opts.on_epoch = [&](const siamese::ScorerEpochLog& e) {
    if (e.epoch == 1 || e.epoch % 10 == 0 || e.epoch == cfg_.scorer.epochs) {
      log(stage + ": epoch " + std::to_string(e.epoch) + " loss " + fmt(e.loss) + " val_acc " + fmt(e.val_accuracy) +
          " (" + fmt(t.seconds()) + " s)");
    }
  };
  const auto ckpt = siamese::train_scorer(pairs, opts);
  log(stage + ": best epoch " + std::to_string(ckpt.best_epoch));
  siamese::save_checkpoint(ckpt, ckpt_path);
  record("train-scorer", ckpt_path);
}

// ---------------------------------------------------------------------------
// Inference and evaluation
// ---------------------------------------------------------------------------

void Run::infer(AblationMode mode, int patch_size, bool reuse) {
  const fs::path out = infer_dir(mode, patch_size);
  const fs::path index = out / "index.csv";
  const bool augmented = uses_augmentation(mode);
  require(recon_checkpoint(augmented), "reconstructor checkpoint for " + std::string(eval::ablation_mode_name(mode)));
  std::unique_ptr<siamese::SiameseScorer> scorer;
  if (uses_scorer(mode)) {
    require(scorer_checkpoint(patch_size), "scorer checkpoint (run 'train-scorer' first)");
  }
  if (!claim(index, reuse)) return;
  if (uses_scorer(mode)) {
    auto ckpt = siamese::load_checkpoint(scorer_checkpoint(patch_size));
    if (opts_.device != torch::kCPU) ckpt.encoder->to(opts_.device);
    scorer = std::make_unique<siamese::SiameseScorer>(ckpt.encoder, cfg_.inference.batch_size);
  }

  std::string rows = "image_id,split,rec,heat,final\n";
  for (const auto split : {data::Split::kVal, data::Split::kTest}) {
    const auto& recs = reconstructions(augmented, split);
    std::size_t k = 0;
    for (const auto& s : samples()) {
      if (s.split != split) continue;
      const Image2D& rec = recs[k++];
      infer::FinalMap fm;
      std::string heat_name;
      if (scorer) {
        const auto a = infer::heatmap(*s.image, rec, *scorer, patch_size, cfg_.inference.stride);
        fm = infer::final_map(*s.image, rec, a);
        heat_name = s.id + "_heat.pfm";
        io::write_pfm(out / heat_name, a.pixels);
        record("infer", out / heat_name);
      } else {
        fm = infer::residual_map(*s.image, rec);
      }
      io::write_pfm(out / (s.id + "_rec.pfm"), rec.pixels);
      io::write_pfm(out / (s.id + "_final.pfm"), fm.pixels);
      record("infer", out / (s.id + "_rec.pfm"));
      record("infer", out / (s.id + "_final.pfm"));
      rows += s.id + ',' + std::string(data::split_name(split)) + ',' + s.id + "_rec.pfm," + heat_name + ',' + s.id +
              "_final.pfm\n";
    }
  }
  write_text(index, rows);
  record("infer", index);
  log("infer: " + tag(mode, patch_size));
}

namespace {

json result_to_json(const MetricRow& row, const std::vector<std::string>& ids, double val_dice) {
  const auto& r = row.result;
  json per_image = json::array();
  for (std::size_t i = 0; i < ids.size(); ++i) per_image.push_back({{"image_id", ids[i]}, {"dice", r.per_image_dice[i]}});
  return {{"mode", std::string(eval::ablation_mode_name(row.mode))},
          {"patch_size", row.patch_size ? json(*row.patch_size) : json(nullptr)},
          {"dice", r.dice},
          {"precision", r.precision},
          {"recall", r.recall},
          {"auprc", r.auprc},
          {"threshold", r.threshold},
          {"dice_stderr", r.dice_stderr},
          {"dice_ci95", {r.dice_ci_low, r.dice_ci_high}},
          {"validation_dice", val_dice},
          {"per_image", per_image}};
}

MetricRow result_from_json(const json& j) {
  try {
    MetricRow row;
    row.mode = eval::parse_ablation_mode(j.at("mode").get<std::string>());
    if (!j.at("patch_size").is_null()) row.patch_size = j.at("patch_size").get<int>();
    auto& r = row.result;
    r.dice = j.at("dice").get<double>();
    r.precision = j.at("precision").get<double>();
    r.recall = j.at("recall").get<double>();
    r.auprc = j.at("auprc").get<double>();
    r.threshold = j.at("threshold").get<double>();
    r.dice_stderr = j.at("dice_stderr").get<double>();
    r.dice_ci_low = j.at("dice_ci95").at(0).get<double>();
    r.dice_ci_high = j.at("dice_ci95").at(1).get<double>();
    for (const auto& e : j.at("per_image")) r.per_image_dice.push_back(e.at("dice").get<double>());
    return row;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo, std::string("malformed evaluation file: ") + e.what());
  }
}

bool row_before(const MetricRow& a, const MetricRow& b) {
  if (a.mode != b.mode) return a.mode < b.mode;
  return a.patch_size.value_or(0) < b.patch_size.value_or(0);
}

}  // namespace

MetricRow Run::evaluate(AblationMode mode, int patch_size, bool reuse) {
  const fs::path out = eval_file(mode, patch_size);
  const fs::path index = infer_dir(mode, patch_size) / "index.csv";
  require(index, "inference output for " + tag(mode, patch_size) + " (run 'infer' first)");
  if (!claim(out, reuse)) return result_from_json(json::parse(read_text(out)));

  struct Loaded {
    std::string id;
    data::Split split;
    RealGrid final_map;
    Mask gt;
    Mask region;
  };
  std::map<std::string, const Sample*> by_id;
  for (const auto& s : samples()) by_id[s.id] = &s;
  std::vector<Loaded> loaded;
  std::istringstream lines(read_text(index));
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (cells.size() < 2) throw Error(ErrorCode::kIo, "malformed inference index " + index.string());
    const auto it = by_id.find(cells[0]);
    if (it == by_id.end() || !it->second->gt) {
      throw Error(ErrorCode::kManifest, "inference index names unknown or unlabeled image " + cells[0]);
    }
    const Sample& s = *it->second;
    Loaded l{s.id, data::parse_split(cells[1]), io::read_pfm(infer_dir(mode, patch_size) / (s.id + "_final.pfm")),
             *s.gt, s.image->foreground()};
    loaded.push_back(std::move(l));
  }

  std::vector<eval::ScoredImage> val;
  std::vector<eval::ScoredImage> test;
  std::vector<std::string> test_ids;
  for (const auto& l : loaded) {
    const eval::ScoredImage im{&l.final_map, &l.gt, cfg_.eval.auprc_foreground_only ? &l.region : nullptr};
    if (l.split == data::Split::kVal) val.push_back(im);
    if (l.split == data::Split::kTest) {
      test.push_back(im);
      test_ids.push_back(l.id);
    }
  }
  if (val.empty()) throw Error(ErrorCode::kManifest, "no validation images to select the threshold on");
  if (test.empty()) throw Error(ErrorCode::kManifest, "no test images to evaluate");
  const double t = eval::select_threshold(val, cfg_.eval.threshold_candidates);
  MetricRow row;
  row.mode = mode;
  if (uses_scorer(mode)) row.patch_size = patch_size;
  row.result = eval::evaluate(test, t, cfg_.seed);
  write_text(out, result_to_json(row, test_ids, eval::pooled_dice(val, t)).dump(2) + "\n");
  record("evaluate", out);
  write_metric_table();
  log("evaluate: " + tag(mode, patch_size) + " dice " + fmt(row.result.dice) + " auprc " + fmt(row.result.auprc) +
      " threshold " + fmt(t));
  return row;
}

std::vector<MetricRow> Run::collect_rows() const {
  std::vector<MetricRow> rows;
  const fs::path eval_dir = dir() / "eval";
  if (!fs::exists(eval_dir)) return rows;
  for (const auto& e : fs::directory_iterator(eval_dir)) {
    if (e.path().extension() == ".json") rows.push_back(result_from_json(json::parse(read_text(e.path()))));
  }
  std::sort(rows.begin(), rows.end(), row_before);
  return rows;
}

void Run::write_metric_table() const {
  write_text(metrics_table(), format_metric_table(collect_rows()));
  record("evaluate", metrics_table());
}

// ---------------------------------------------------------------------------
// Composite experiments
// ---------------------------------------------------------------------------

// A summary identical to the existing file is a no-op, so composite commands
// can be rerun over finished stages.
void Run::write_summary(const fs::path& table, const std::string& stage, const std::vector<MetricRow>& rows) const {
  const std::string text = format_metric_table(rows);
  if (fs::exists(table) && read_text(table) == text) return;
  claim(table, false);
  write_text(table, text);
  record(stage, table);
}

std::vector<MetricRow> Run::ablate(int patch_size) {
  std::vector<MetricRow> rows;
  for (const auto mode : {AblationMode::kFull, AblationMode::kNoPatchScoring, AblationMode::kNoPatchScoringNoAug}) {
    train_recon(uses_augmentation(mode), true);
    if (uses_scorer(mode)) train_scorer(patch_size, true);
    infer(mode, patch_size, true);
    rows.push_back(evaluate(mode, patch_size, true));
  }
  write_summary(ablation_table(), "ablate", rows);
  return rows;
}

std::vector<MetricRow> Run::sweep_patch_size() {
  train_recon(true, true);
  std::vector<MetricRow> rows;
  for (int s : cfg_.eval.sweep_patch_sizes) {
    train_scorer(s, true);
    infer(AblationMode::kFull, s, true);
    rows.push_back(evaluate(AblationMode::kFull, s, true));
  }
  write_summary(sweep_table(), "sweep-patch-size", rows);
  return rows;
}

}  // namespace arepas::pipeline
