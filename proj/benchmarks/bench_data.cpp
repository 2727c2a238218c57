#include "cxr/augment.hpp"
#include "cxr/checksum.hpp"
#include "cxr/metrics.hpp"
#include "cxr/random.hpp"
#include "cxr/roc.hpp"
#include "cxr/splits.hpp"

#include <benchmark/benchmark.h>

#include <algorithm>
#include <cmath>

using namespace cxr;

namespace {

Manifest synthetic(int covid, int normal, int viral) {
  Manifest m;
  for (const auto& [label, n] : {std::pair{Label::Covid19, covid}, {Label::Normal, normal}, {Label::ViralPneumonia, viral}}) {
    for (int i = 0; i < n; ++i) {
      const auto path = std::string(to_string(label)) + "/" + std::to_string(100000 + i) + ".png";
      const auto sha = sha256_hex(path);
      m.records.push_back({"img-" + sha.substr(0, 16), path, label, sha, 8, 8, "bench"});
    }
  }
  std::sort(m.records.begin(), m.records.end(), [](auto& a, auto& b) { return a.path < b.path; });
  return m;
}

Raster pattern(int side) {
  Raster r(side, side, 1);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) r.at(x, y) = static_cast<float>(127.5 + 120.0 * std::sin(0.05 * x) * std::cos(0.07 * y));
  return r;
}

}  // namespace

static void BM_StratifiedSplit(benchmark::State& state) {
  const auto m = synthetic(423, 1579, 1485);
  for (auto _ : state) {
    auto plan = carve_validation(stratified_kfold(m, 5, 1, Scheme::ThreeClass), 0.10);
    benchmark::DoNotOptimize(plan);
  }
}
BENCHMARK(BM_StratifiedSplit)->Unit(benchmark::kMillisecond);

static void BM_ExpandFold(benchmark::State& state) {
  const auto plan = carve_validation(stratified_kfold(synthetic(423, 1579, 1485), 5, 1, Scheme::ThreeClass), 0.10);
  AugmentationSpec spec;
  for (auto _ : state) benchmark::DoNotOptimize(expand_training_fold(plan, 0, spec));
}
BENCHMARK(BM_ExpandFold)->Unit(benchmark::kMillisecond);

static void BM_Rotate(benchmark::State& state) {
  const auto img = pattern(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(rotate(img, 15.0));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_Rotate)->Arg(32)->Arg(224)->Arg(1024);

static void BM_Translate(benchmark::State& state) {
  const auto img = pattern(224);
  for (auto _ : state) benchmark::DoNotOptimize(translate(img, 0.033, -0.018));
}
BENCHMARK(BM_Translate);

static void BM_ConfusionMetrics(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  Rng rng(3);
  std::vector<int> truth, predicted;
  for (int i = 0; i < 3487; ++i) {
    truth.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(k))));
    predicted.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(k))));
  }
  std::vector<std::string> names;
  for (int i = 0; i < k; ++i) names.push_back("c" + std::to_string(i));
  for (auto _ : state) {
    const auto cm = accumulate(ConfusionMatrix(names), truth, predicted);
    benchmark::DoNotOptimize(table_row(aggregate(cm)));
  }
}
BENCHMARK(BM_ConfusionMetrics)->Arg(2)->Arg(3)->Arg(5);

static void BM_RocCurve(benchmark::State& state) {
  Rng rng(5);
  std::vector<double> scores;
  std::vector<int> labels;
  for (int i = 0; i < state.range(0); ++i) {
    labels.push_back(rng.unit() < 0.3 ? 1 : 0);
    scores.push_back(rng.unit() + 0.4 * labels.back());
  }
  for (auto _ : state) benchmark::DoNotOptimize(roc_curve(scores, labels, 1));
}
BENCHMARK(BM_RocCurve)->Arg(500)->Arg(3487)->Arg(100000);
BENCHMARK_MAIN();
