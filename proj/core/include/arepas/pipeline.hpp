#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "arepas/eval_metrics.hpp"
#include "arepas/experiment_config.hpp"
#include "arepas/manifest.hpp"

namespace arepas::pipeline {

enum class DeviceKind { kCpu, kAccelerator };

/// kDevice when an accelerator is requested but none is available.
torch::Device resolve_device(DeviceKind kind);

struct RunOptions {
  std::filesystem::path run_dir;
  bool overwrite = false;
  torch::Device device = torch::kCPU;
  /// Progress lines; silent when empty.
  std::function<void(const std::string&)> log;
};

/// One evaluated image set loaded from the preprocessed manifest.
struct Sample {
  std::string id;
  data::Split split = data::Split::kTrain;
  std::shared_ptr<const Image2D> image;
  std::optional<Mask> gt;
};

/// A row of the metric tables.
struct MetricRow {
  eval::AblationMode mode = eval::AblationMode::kFull;
  /// Absent for the scorer-free modes.
  std::optional<int> patch_size;
  eval::EvalResult result;
};

inline constexpr std::string_view kMetricHeader = "mode,patch_size,dice,dice_stderr,precision,recall,auprc,threshold";

std::string format_metric_table(const std::vector<MetricRow>& rows);

// Run directory layout:
//
//   config.json                  resolved configuration (seed included)
//   artifacts.csv                stage,path of every produced file
//   data/                        synth-generate output (manifest.csv, ...)
//   preprocessed/manifest.csv    normalized images, masks and ground truth
//   recon/augmented.ckpt         reconstructor trained with edge augmentation
//   recon/plain.ckpt             reconstructor trained on clean edges only
//   scorer/patch_<s>.ckpt        Siamese scorer for patch size s
//   infer/<tag>/                 per-image rec/heat/final maps + index.csv
//   eval/<tag>.json              evaluation of one variant
//   eval/metrics.csv             every evaluated variant
//   eval/ablation.csv            ablate output
//   eval/patch_sweep.csv         sweep-patch-size output
//   report/                      figures, overlays and index.md
//
// <tag> is FULL_s<s>, NO_PATCH_SCORING or NO_PATCH_SCORING_NO_AUG.
//
// Directories are append-only: a stage whose output already exists fails
// with kPathCollision unless the run was opened with overwrite. Composite
// commands (ablate, sweep) reuse outputs that already exist.
class Run {
 public:
  /// Creates the run directory or reopens it. An existing config.json must
  /// equal `cfg` unless overwrite is set, in which case it is replaced.
  Run(ExperimentConfig cfg, RunOptions options);

  /// Reopens a run from its stored config.json.
  static Run open(RunOptions options);

  const ExperimentConfig& config() const { return cfg_; }
  const std::filesystem::path& dir() const { return opts_.run_dir; }

  std::filesystem::path preprocessed_manifest() const;
  std::filesystem::path recon_checkpoint(bool augmented) const;
  std::filesystem::path scorer_checkpoint(int patch_size) const;
  std::filesystem::path infer_dir(eval::AblationMode mode, int patch_size) const;
  std::filesystem::path eval_file(eval::AblationMode mode, int patch_size) const;
  std::filesystem::path metrics_table() const;
  std::filesystem::path ablation_table() const;
  std::filesystem::path sweep_table() const;
  std::filesystem::path report_dir() const;

  static std::string tag(eval::AblationMode mode, int patch_size);

  /// Synthetic dataset under data/; returns its manifest path.
  std::filesystem::path synth_generate();
  void preprocess(const std::filesystem::path& manifest);
  void train_recon(bool augmented, bool reuse = false);
  void train_scorer(int patch_size, bool reuse = false);
  void infer(eval::AblationMode mode, int patch_size, bool reuse = false);
  MetricRow evaluate(eval::AblationMode mode, int patch_size, bool reuse = false);

  /// FULL, NO_PATCH_SCORING and NO_PATCH_SCORING_NO_AUG at `patch_size`,
  /// training whatever is missing; writes eval/ablation.csv.
  std::vector<MetricRow> ablate(int patch_size);
  /// FULL at every configured sweep size; writes eval/patch_sweep.csv.
  std::vector<MetricRow> sweep_patch_size();

  /// Figures, overlays and the metric table under report/.
  void report();

  std::vector<Sample> load_samples() const;

 private:
  void log(const std::string& msg) const;
  void record(const std::string& stage, const std::filesystem::path& file) const;
  /// False when `output` exists and should be reused; throws on collision.
  bool claim(const std::filesystem::path& output, bool reuse) const;
  void require(const std::filesystem::path& prerequisite, const std::string& what) const;
  const std::vector<Sample>& samples();
  const std::vector<Image2D>& reconstructions(bool augmented, data::Split split);
  std::vector<MetricRow> collect_rows() const;
  void write_metric_table() const;
  void write_summary(const std::filesystem::path& table, const std::string& stage,
                     const std::vector<MetricRow>& rows) const;

  ExperimentConfig cfg_;
  RunOptions opts_;
  std::optional<std::vector<Sample>> samples_;
  std::map<std::pair<bool, data::Split>, std::vector<Image2D>> rec_cache_;
};

}  // namespace arepas::pipeline
