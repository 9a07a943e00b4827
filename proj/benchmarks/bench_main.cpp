#include <benchmark/benchmark.h>

#include "synloc/augment.hpp"
#include "synloc/heatmap.hpp"
#include "synloc/metrics.hpp"
#include "synloc/micronet.hpp"
#include "synloc/patch_grid.hpp"
#include "synloc/rng.hpp"
#include "synloc/pipeline.hpp"
#include "synloc/scoring.hpp"
#include "synloc/splicer.hpp"

using namespace synloc;

namespace {

Raster random_image(std::uint64_t seed, int side) {
  Rng rng(seed);
  Raster img(side, side, 1);
  for (float& v : img.pixels) v = static_cast<float>(rng.uniform());
  return img;
}

std::vector<PatchScore> dense_scores(int side, int patch, int stride) {
  Rng rng(7);
  std::vector<PatchScore> scores;
  for (const PatchRef& r : enumerate_positions(side, side, {patch, stride}))
    scores.push_back({r.top, r.left, rng.uniform()});
  return scores;
}

void BM_AccumulateDense(benchmark::State& state) {
  const auto scores = dense_scores(256, 32, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    Accumulator acc(256, 256);
    for (const PatchScore& s : scores) acc.add(s, 32);
    benchmark::DoNotOptimize(acc.finalize());
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(scores.size()));
}
BENCHMARK(BM_AccumulateDense)->Arg(4)->Arg(8)->Arg(32);

void BM_AccumulateDiff(benchmark::State& state) {
  const auto scores = dense_scores(256, 32, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    DiffAccumulator acc(256, 256);
    for (const PatchScore& s : scores) acc.add(s, 32);
    benchmark::DoNotOptimize(acc.finalize());
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(scores.size()));
}
BENCHMARK(BM_AccumulateDiff)->Arg(4)->Arg(8)->Arg(32);

void BM_MicronetForward(benchmark::State& state) {
  const NetParams params = NetParams::he_uniform(NetShape{32, 1}, 3);
  const Raster patch = random_image(5, 32);
  for (auto _ : state) benchmark::DoNotOptimize(forward(params, patch));
}
BENCHMARK(BM_MicronetForward);

void BM_MicronetLossAndGrads(benchmark::State& state) {
  const NetParams params = NetParams::he_uniform(NetShape{32, 1}, 3);
  Rng rng(9);
  std::vector<LabeledPatch> batch;
  for (int i = 0; i < 25; ++i)
    batch.push_back({random_image(rng.next_u64(), 32),
                     static_cast<std::uint8_t>(i % 2)});
  NetParams grads = NetParams::zeros(params.shape);
  for (auto _ : state)
    benchmark::DoNotOptimize(loss_and_grads(params, batch, grads, 1));
  state.SetItemsProcessed(state.iterations() * 25);
}
BENCHMARK(BM_MicronetLossAndGrads);

void BM_JpegRoundtrip(benchmark::State& state) {
  const Raster img = random_image(11, 256);
  for (auto _ : state)
    benchmark::DoNotOptimize(jpeg_roundtrip(img, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_JpegRoundtrip)->Arg(40)->Arg(100);

void BM_ApplyAugment(benchmark::State& state) {
  const Raster patch = random_image(13, 32);
  const AugmentConfig cfg;
  Rng rng(17);
  for (auto _ : state) benchmark::DoNotOptimize(apply_augment(patch, cfg, rng));
}
BENCHMARK(BM_ApplyAugment);

void BM_PixelAuc(benchmark::State& state) {
  Rng rng(19);
  FloatMap h(256, 256, 0.0);
  BinaryMask m(256, 256, 0);
  for (double& v : h.values) v = rng.uniform();
  for (auto& l : m.labels) l = rng.uniform() < 0.1 ? 1 : 0;
  m.labels[0] = 1;
  m.labels[1] = 0;
  for (auto _ : state) benchmark::DoNotOptimize(pixel_auc(h, m));
}
BENCHMARK(BM_PixelAuc);

void BM_OracleLocalize(benchmark::State& state) {
  const auto [real, synth] = gen_toy_pair(23, 256);
  const SpliceResult spliced = splice(real, synth, 64, 29);
  const OracleScorer scorer(spliced.mask);
  const PatchSpec spec{32, static_cast<int>(state.range(0))};
  for (auto _ : state)
    benchmark::DoNotOptimize(localize(spliced.image, spec, scorer, 1));
}
BENCHMARK(BM_OracleLocalize)->Arg(4)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
