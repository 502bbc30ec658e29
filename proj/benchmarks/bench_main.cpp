#include <benchmark/benchmark.h>

#include <vector>

#include "pathmarl/config.hpp"
#include "pathmarl/learners/forest.hpp"
#include "pathmarl/learners/metrics.hpp"
#include "pathmarl/learners/mlp.hpp"
#include "pathmarl/pipeline.hpp"
#include "pathmarl/reward.hpp"

using namespace pathmarl;

namespace {

SyntheticData planted(std::size_t genes) {
  SyntheticParams p;
  p.n_samples = 210;
  p.n_genes = genes;
  p.n_pathways = genes / 20;
  p.seed = 5;
  return generate_synthetic(p);
}

void BM_ForestFit(benchmark::State& state) {
  const auto data = planted(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(rf_fit(data.dataset.x(), data.dataset.y(), 100, 1));
}
BENCHMARK(BM_ForestFit)->Arg(40)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_SubsetEvaluation(benchmark::State& state) {
  const auto data = planted(400);
  RunConfig config;
  std::vector<std::string> pool(data.dataset.genes().begin(), data.dataset.genes().begin() + 80);
  Rng rng(3);
  for (auto _ : state) {
    state.PauseTiming();
    SubsetEvaluator ev = make_evaluator(config, data.dataset, pool);
    std::vector<int> sel(pool.size());
    for (auto& a : sel) a = uniform01(rng) < 0.5;
    state.ResumeTiming();
    benchmark::DoNotOptimize(ev.evaluate(sel));
  }
}
BENCHMARK(BM_SubsetEvaluation)->Unit(benchmark::kMillisecond);

void BM_AgentTrainStep(benchmark::State& state) {
  Rng rng(7);
  Mlp net({130, 256, 128, 64, 2}, true, rng);
  Matrix x = Matrix::Random(130, 64), t = Matrix::Random(2, 64);
  for (auto _ : state) benchmark::DoNotOptimize(net.train_step(x, t, LossKind::kHuber, 3e-4, OptimizerKind::kAdam));
}
BENCHMARK(BM_AgentTrainStep)->Unit(benchmark::kMicrosecond);

void BM_Auc(benchmark::State& state) {
  Rng rng(9);
  const auto n = static_cast<std::size_t>(state.range(0));
  Vector s(static_cast<Eigen::Index>(n));
  Labels y(n);
  for (std::size_t i = 0; i < n; ++i) {
    s(static_cast<Eigen::Index>(i)) = uniform01(rng);
    y[i] = uniform01(rng) < 0.5;
  }
  for (auto _ : state) benchmark::DoNotOptimize(auc(s, y));
}
BENCHMARK(BM_Auc)->Arg(100)->Arg(10000);

void BM_PathwayDeltas(benchmark::State& state) {
  const auto data = planted(400);
  std::vector<std::string> pool(data.dataset.genes().begin(), data.dataset.genes().begin() + 80);
  const auto ps = build_pathway_structure(data.pathways, pool, data.dataset.genes());
  Rng rng(11);
  std::vector<int> sel(pool.size());
  for (auto& a : sel) a = uniform01(rng) < 0.5;
  for (auto _ : state)
    for (std::size_t i = 0; i < pool.size(); ++i) {
      benchmark::DoNotOptimize(delta_phi(i, sel, ps));
      benchmark::DoNotOptimize(delta_psi(i, sel, ps));
    }
}
BENCHMARK(BM_PathwayDeltas);

}  // namespace

BENCHMARK_MAIN();
