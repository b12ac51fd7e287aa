#include <benchmark/benchmark.h>

#include "arepas/anomaly_infer.hpp"
#include "arepas/imgproc.hpp"
#include "arepas/patch_siamese.hpp"
#include "arepas/recon_gan.hpp"
#include "arepas/synthdata.hpp"

using namespace arepas;

namespace {

Image2D synth_image(int size) {
  synth::SynthConfig cfg;
  cfg.image_size = size;
  auto rng = derive_rng(1, 0);
  return synth::gen_normal(rng, cfg);
}

}  // namespace

static void BM_Canny(benchmark::State& state) {
  const auto img = synth_image(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(imgproc::canny_edges(img));
  state.SetItemsProcessed(state.iterations() * img.pixels.size());
}
BENCHMARK(BM_Canny)->Arg(64)->Arg(256);

static void BM_Otsu(benchmark::State& state) {
  const auto img = synth_image(static_cast<int>(state.range(0)));
  const auto fg = img.foreground();
  for (auto _ : state) benchmark::DoNotOptimize(imgproc::otsu_threshold(img, fg));
}
BENCHMARK(BM_Otsu)->Arg(64)->Arg(256);

static void BM_HeatmapSiamese(benchmark::State& state) {
  const auto real = synth_image(64);
  const int s = static_cast<int>(state.range(0));
  siamese::SiameseSpec spec;
  spec.patch_size = s;
  torch::manual_seed(0);
  const siamese::SiameseScorer scorer(siamese::build_encoder(spec));
  for (auto _ : state) benchmark::DoNotOptimize(infer::heatmap(real, real, scorer, s));
}
BENCHMARK(BM_HeatmapSiamese)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_EmbedBatch(benchmark::State& state) {
  siamese::SiameseSpec spec;
  torch::manual_seed(0);
  auto enc = siamese::build_encoder(spec);
  enc->eval();
  const auto x = torch::rand({state.range(0), 1, spec.patch_size, spec.patch_size});
  torch::NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(enc->forward(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EmbedBatch)->Arg(64)->Arg(1024)->Unit(benchmark::kMillisecond);

static void BM_GeneratorForward(benchmark::State& state) {
  recon::GeneratorSpec spec;
  spec.base_filters = 16;
  torch::manual_seed(0);
  auto g = recon::build_generator(spec);
  g->eval();
  const auto x = torch::rand({1, 1, state.range(0), state.range(0)});
  torch::NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(g->forward(x));
}
BENCHMARK(BM_GeneratorForward)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
