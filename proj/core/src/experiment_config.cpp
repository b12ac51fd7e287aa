#include "arepas/experiment_config.hpp"

#include <fstream>
#include <sstream>

#include "json_io.hpp"

namespace arepas {

using detail::json;
using detail::ObjectReader;

void apply_seed(ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.augment.seed = seed;
  cfg.recon.seed = seed;
  cfg.scorer.seed = seed;
  cfg.synth.seed = seed;
}

void validate(const ExperimentConfig& cfg) {
  const auto bad = [](const std::string& msg) { return Error(ErrorCode::kConfig, msg); };
  if (cfg.version != kConfigVersion) {
    throw bad("unsupported config version " + std::to_string(cfg.version) + " (expected " +
              std::to_string(kConfigVersion) + ")");
  }
  augment::validate(cfg.augment);
  recon::validate(cfg.generator);
  recon::validate(cfg.discriminator);
  recon::validate(cfg.recon);
  siamese::validate(cfg.siamese);
  siamese::validate(cfg.scorer);
  synth::validate(cfg.synth);
  if (cfg.image_size < 8) throw bad("image_size must be >= 8");
  if (cfg.image_size % (1 << cfg.generator.downsample_layers) != 0) {
    throw bad("image_size must be divisible by 2^generator.downsample_layers");
  }
  if (cfg.modality == Modality::kSynth && cfg.synth.image_size != cfg.image_size) {
    throw bad("synth.image_size must equal image_size");
  }
  if (!(cfg.recon_validation_fraction >= 0.0 && cfg.recon_validation_fraction < 1.0)) {
    throw bad("recon_validation_fraction must lie in [0, 1)");
  }
  if (cfg.siamese.patch_size > cfg.image_size) throw bad("siamese.patch_size exceeds image_size");
  if (cfg.inference.stride < 0 || cfg.inference.batch_size < 1) throw bad("bad inference options");
  if (cfg.eval.threshold_candidates < 2) throw bad("eval.threshold_candidates must be >= 2");
  if (cfg.eval.sweep_patch_sizes.empty()) throw bad("eval.sweep_patch_sizes is empty");
  for (int s : cfg.eval.sweep_patch_sizes) {
    if (s < 4 || s > cfg.image_size) throw bad("sweep patch size " + std::to_string(s) + " out of range");
  }
}

namespace {

json without_seed(json j) {
  j.erase("seed");
  return j;
}

template <typename T>
void read_section(ObjectReader& r, const char* key, T& out) {
  const json* v = r.take(key);
  if (!v) return;
  if (v->is_object() && v->contains("seed")) {
    throw Error(ErrorCode::kConfig, r.path(key) + ".seed: seeds are set by the top-level 'seed' only");
  }
  detail::from_json(*v, out, r.path(key));
}

json synth_to_json(const synth::SynthConfig& s) {
  const auto range = [](synth::Range r) { return json::array({r.lo, r.hi}); };
  const auto irange = [](synth::IntRange r) { return json::array({r.lo, r.hi}); };
  return {{"image_size", s.image_size},
          {"n_normal", s.n_normal},
          {"n_val", s.n_val},
          {"n_test", s.n_test},
          {"vessel_count", irange(s.vessel_count)},
          {"vessel_width", range(s.vessel_width)},
          {"vessel_intensity", range(s.vessel_intensity)},
          {"base_level", s.base_level},
          {"texture_amplitude", s.texture_amplitude},
          {"anomaly_area_frac", range(s.anomaly_area_frac)},
          {"anomaly_blobs", irange(s.anomaly_blobs)},
          {"anomaly_intensity_shift", range(s.anomaly_intensity_shift)}};
}

template <typename R>
void read_range(ObjectReader& r, const char* key, R& out) {
  const json* v = r.take(key);
  if (!v) return;
  using V = decltype(out.lo);
  const bool ok = v->is_array() && v->size() == 2 &&
                  (std::is_integral_v<V> ? (*v)[0].is_number_integer() && (*v)[1].is_number_integer()
                                         : (*v)[0].is_number() && (*v)[1].is_number());
  if (!ok) throw Error(ErrorCode::kConfig, r.path(key) + ": expected a [lo, hi] pair");
  out.lo = (*v)[0].get<V>();
  out.hi = (*v)[1].get<V>();
}

void synth_from_json(const json& j, synth::SynthConfig& s, std::string_view where) {
  if (j.is_object() && j.contains("seed")) {
    throw Error(ErrorCode::kConfig, std::string(where) + ".seed: seeds are set by the top-level 'seed' only");
  }
  ObjectReader r(j, where);
  r.read("image_size", s.image_size);
  r.read("n_normal", s.n_normal);
  r.read("n_val", s.n_val);
  r.read("n_test", s.n_test);
  read_range(r, "vessel_count", s.vessel_count);
  read_range(r, "vessel_width", s.vessel_width);
  read_range(r, "vessel_intensity", s.vessel_intensity);
  r.read("base_level", s.base_level);
  r.read("texture_amplitude", s.texture_amplitude);
  read_range(r, "anomaly_area_frac", s.anomaly_area_frac);
  read_range(r, "anomaly_blobs", s.anomaly_blobs);
  read_range(r, "anomaly_intensity_shift", s.anomaly_intensity_shift);
  r.finish();
}

}  // namespace

std::string serialize_config(const ExperimentConfig& cfg) {
  json j = {{"version", cfg.version},
            {"modality", std::string(modality_name(cfg.modality))},
            {"image_size", cfg.image_size},
            {"seed", cfg.seed},
            {"canny", detail::to_json(cfg.canny)},
            {"augment", without_seed(detail::to_json(cfg.augment))},
            {"generator", detail::to_json(cfg.generator)},
            {"discriminator", detail::to_json(cfg.discriminator)},
            {"recon", without_seed(detail::to_json(cfg.recon))},
            {"recon_validation_fraction", cfg.recon_validation_fraction},
            {"siamese", detail::to_json(cfg.siamese)},
            {"scorer", without_seed(detail::to_json(cfg.scorer))},
            {"inference", {{"stride", cfg.inference.stride}, {"batch_size", cfg.inference.batch_size}}},
            {"eval",
             {{"auprc_foreground_only", cfg.eval.auprc_foreground_only},
              {"threshold_candidates", cfg.eval.threshold_candidates},
              {"sweep_patch_sizes", cfg.eval.sweep_patch_sizes}}},
            {"synth", synth_to_json(cfg.synth)}};
  return j.dump(2) + "\n";
}

ExperimentConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  ObjectReader r(j, "");
  if (!j.contains("version")) throw Error(ErrorCode::kConfig, "config lacks a 'version' field");
  r.read("version", cfg.version);
  if (cfg.version != kConfigVersion) {
    throw Error(ErrorCode::kConfig, "unsupported config version " + std::to_string(cfg.version));
  }
  std::string modality(modality_name(cfg.modality));
  r.read("modality", modality);
  cfg.modality = parse_modality(modality);
  r.read("image_size", cfg.image_size);
  r.read("seed", cfg.seed);
  read_section(r, "canny", cfg.canny);
  read_section(r, "augment", cfg.augment);
  read_section(r, "generator", cfg.generator);
  read_section(r, "discriminator", cfg.discriminator);
  read_section(r, "recon", cfg.recon);
  r.read("recon_validation_fraction", cfg.recon_validation_fraction);
  read_section(r, "siamese", cfg.siamese);
  read_section(r, "scorer", cfg.scorer);
  if (const json* v = r.take("inference")) {
    ObjectReader ir(*v, "inference");
    ir.read("stride", cfg.inference.stride);
    ir.read("batch_size", cfg.inference.batch_size);
    ir.finish();
  }
  if (const json* v = r.take("eval")) {
    ObjectReader er(*v, "eval");
    er.read("auprc_foreground_only", cfg.eval.auprc_foreground_only);
    er.read("threshold_candidates", cfg.eval.threshold_candidates);
    er.read("sweep_patch_sizes", cfg.eval.sweep_patch_sizes);
    er.finish();
  }
  if (const json* v = r.take("synth")) synth_from_json(*v, cfg.synth, "synth");
  r.finish();
  apply_seed(cfg, cfg.seed);
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  out << serialize_config(cfg);
  if (!out) throw Error(ErrorCode::kIo, "cannot write config " + path.string());
}

}  // namespace arepas
