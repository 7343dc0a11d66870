#include <benchmark/benchmark.h>

#include <cmath>

#include "rso/autoencoder.hpp"
#include "rso/catalog.hpp"
#include "rso/features.hpp"
#include "rso/gbdt.hpp"
#include "rso/kmeans.hpp"
#include "rso/shap.hpp"
#include "rso/synthetic.hpp"
#include "rso/umap.hpp"

namespace {

rso::FeatureMatrix fixture(std::size_t leo) {
  rso::SyntheticOptions opt;
  opt.leo_objects = leo;
  const auto cat = rso::make_synthetic_catalog(opt);
  const auto objects = rso::filter_leo(rso::merge_catalogs(cat.satcat, cat.discos));
  return rso::build_feature_matrix(objects, rso::infer_schema(objects));
}

rso::Matrix gaussian(std::size_t n, std::size_t d, std::uint64_t seed) {
  rso::Rng rng(seed);
  rso::Matrix m(n, d);
  for (auto& v : m.values()) v = rng.normal();
  return m;
}

void BM_ExactKnn(benchmark::State& state) {
  const auto pts = gaussian(static_cast<std::size_t>(state.range(0)), 4, 1);
  for (auto _ : state) benchmark::DoNotOptimize(rso::exact_knn(pts, 14));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ExactKnn)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_UmapFit(benchmark::State& state) {
  const auto pts = gaussian(static_cast<std::size_t>(state.range(0)), 4, 2);
  rso::UmapConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(rso::umap_fit(pts, cfg));
}
BENCHMARK(BM_UmapFit)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_KmeansFit(benchmark::State& state) {
  const auto pts = gaussian(static_cast<std::size_t>(state.range(0)), 4, 3);
  for (auto _ : state) benchmark::DoNotOptimize(rso::kmeans_fit(pts, 8, 4));
}
BENCHMARK(BM_KmeansFit)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_AutoencoderEpoch(benchmark::State& state) {
  const auto m = fixture(2000);
  rso::TrainConfig cfg;
  cfg.epochs = 1;
  cfg.validation_fraction = 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(rso::train(m, {{16, 4, 16}}, cfg));
}
BENCHMARK(BM_AutoencoderEpoch)->Unit(benchmark::kMillisecond);

void BM_GbdtFit(benchmark::State& state) {
  const auto m = fixture(2000);
  const auto data = rso::gbdt_data_from(m);
  std::vector<std::size_t> labels(data.n_rows);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 8;
  rso::GbdtParams p;
  p.rounds = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(rso::fit_gbdt(data, labels, 8, p));
}
BENCHMARK(BM_GbdtFit)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_TreeShapRow(benchmark::State& state) {
  const auto m = fixture(2000);
  const auto data = rso::gbdt_data_from(m);
  std::vector<std::size_t> labels(data.n_rows);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 8;
  rso::GbdtParams p;
  p.rounds = 20;
  const auto forest = rso::fit_gbdt(data, labels, 8, p);
  std::size_t r = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rso::tree_shap(forest, data.row(r), 0));
    r = (r + 1) % data.n_rows;
  }
}
BENCHMARK(BM_TreeShapRow)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
