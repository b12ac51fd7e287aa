// arepas: command-line driver for the two-stage anomaly segmentation
// pipeline. Every stage reads the experiment config, checks its
// prerequisites in the run directory and appends its artifacts there.

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "arepas/error.hpp"
#include "arepas/pipeline.hpp"

namespace fs = std::filesystem;
using arepas::Error;
using arepas::ErrorCode;
using arepas::eval::AblationMode;

namespace {

struct Common {
  std::string config;
  std::string manifest;
  std::string run_dir;
  std::optional<std::uint64_t> seed;
  std::string device = "cpu";
  bool overwrite = false;
  bool quiet = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "experiment config (JSON); defaults to <run-dir>/config.json");
  app->add_option("--manifest", c.manifest, "dataset manifest (CSV)");
  app->add_option("--run-dir", c.run_dir, "run directory (default: $AREPAS_RUN_DIR)");
  app->add_option("--seed", c.seed, "override the config seed");
  app->add_option("--device", c.device, "cpu or accelerator")->check(CLI::IsMember({"cpu", "accelerator"}));
  app->add_flag("--overwrite", c.overwrite, "allow replacing existing artifacts");
  app->add_flag("--quiet", c.quiet, "suppress progress output");
}

arepas::pipeline::Run open_run(const Common& c) {
  arepas::pipeline::RunOptions opts;
  std::string dir = c.run_dir;
  if (dir.empty()) {
    if (const char* env = std::getenv("AREPAS_RUN_DIR")) dir = env;
  }
  if (dir.empty()) throw Error(ErrorCode::kConfig, "no run directory (pass --run-dir or set AREPAS_RUN_DIR)");
  opts.run_dir = dir;
  opts.overwrite = c.overwrite;
  opts.device = arepas::pipeline::resolve_device(c.device == "accelerator" ? arepas::pipeline::DeviceKind::kAccelerator
                                                                          : arepas::pipeline::DeviceKind::kCpu);
  if (!c.quiet) opts.log = [](const std::string& line) { std::cerr << line << std::endl; };

  if (c.config.empty()) {
    if (!c.seed) return arepas::pipeline::Run::open(std::move(opts));
    auto cfg = arepas::pipeline::Run::open(opts).config();
    arepas::apply_seed(cfg, *c.seed);
    return arepas::pipeline::Run(std::move(cfg), std::move(opts));
  }
  auto cfg = arepas::load_config(c.config);
  if (c.seed) arepas::apply_seed(cfg, *c.seed);
  return arepas::pipeline::Run(std::move(cfg), std::move(opts));
}

void print_rows(const std::vector<arepas::pipeline::MetricRow>& rows) {
  std::cout << arepas::pipeline::format_metric_table(rows);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"arepas: edge-conditioned reconstruction with Siamese patch scoring for anomaly segmentation"};
  app.require_subcommand(1);

  Common common;
  bool no_augment = false;
  int patch_size = 0;
  std::string mode = "FULL";

  auto* synth = app.add_subcommand("synth-generate", "write a synthetic dataset to <run-dir>/data");
  auto* pre = app.add_subcommand("preprocess", "normalize the manifest's images into the run directory");
  auto* recon = app.add_subcommand("train-recon", "train the edge-to-image reconstructor");
  recon->add_flag("--no-augment", no_augment, "train on clean edge maps only");
  auto* scorer = app.add_subcommand("train-scorer", "train the Siamese patch scorer");
  auto* infer = app.add_subcommand("infer", "compute heat-maps and final anomaly maps for val/test");
  auto* evaluate = app.add_subcommand("evaluate", "select the threshold on val and score the test split");
  auto* ablate = app.add_subcommand("ablate", "FULL vs NO_PATCH_SCORING vs NO_PATCH_SCORING_NO_AUG");
  auto* sweep = app.add_subcommand("sweep-patch-size", "FULL pipeline at every configured patch size");
  auto* report = app.add_subcommand("report", "figures, overlays and metric table under <run-dir>/report");

  for (auto* sub : {synth, pre, recon, scorer, infer, evaluate, ablate, sweep, report}) add_common(sub, common);
  for (auto* sub : {scorer, infer, evaluate, ablate}) {
    sub->add_option("--patch-size", patch_size, "patch size (default: siamese.patch_size)");
  }
  for (auto* sub : {infer, evaluate}) {
    sub->add_option("--mode", mode, "FULL, NO_PATCH_SCORING or NO_PATCH_SCORING_NO_AUG")
        ->check(CLI::IsMember({"FULL", "NO_PATCH_SCORING", "NO_PATCH_SCORING_NO_AUG"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "ERROR E_USAGE: " << msg << std::endl;
    return 2;
  }

  try {
    auto run = open_run(common);
    const int s = patch_size > 0 ? patch_size : run.config().siamese.patch_size;
    if (synth->parsed()) {
      std::cout << run.synth_generate().string() << "\n";
    } else if (pre->parsed()) {
      fs::path manifest = common.manifest;
      if (manifest.empty()) manifest = run.dir() / "data" / "manifest.csv";
      run.preprocess(manifest);
    } else if (recon->parsed()) {
      run.train_recon(!no_augment);
    } else if (scorer->parsed()) {
      run.train_scorer(s);
    } else if (infer->parsed()) {
      run.infer(arepas::eval::parse_ablation_mode(mode), s);
    } else if (evaluate->parsed()) {
      print_rows({run.evaluate(arepas::eval::parse_ablation_mode(mode), s)});
    } else if (ablate->parsed()) {
      print_rows(run.ablate(s));
    } else if (sweep->parsed()) {
      print_rows(run.sweep_patch_size());
    } else if (report->parsed()) {
      run.report();
      std::cout << (run.report_dir() / "index.md").string() << "\n";
    }
  } catch (const Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "ERROR " << arepas::error_code_name(e.code()) << ": " << msg << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "ERROR E_INTERNAL: " << msg << std::endl;
    return 1;
  }
  return 0;
}
