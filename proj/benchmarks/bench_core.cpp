#include <benchmark/benchmark.h>

#include <random>

#include "mmfuse/cross_modal_map.hpp"
#include "mmfuse/eval_bench.hpp"
#include "mmfuse/fusion_gates.hpp"
#include "mmfuse/synthetic_data.hpp"
#include "mmfuse/trainer.hpp"

using namespace mmfuse;

namespace {

Matrix gaussian(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

const SyntheticCorpus& corpus() {
  static const SyntheticCorpus c = [] {
    SyntheticSpec spec;
    spec.vocab_size = 2000;
    spec.dim = 64;
    spec.num_pairs = 1500;
    spec.visual_fraction = 0.5;
    return generate(spec);
  }();
  return c;
}

void BM_FitRidge(benchmark::State& state) {
  const auto rows = state.range(0), dim = state.range(1);
  Matrix l = gaussian(rows, dim, 1), v = gaussian(rows, dim, 2);
  for (auto _ : state) benchmark::DoNotOptimize(fit_ridge(l, v, 0.6));
  state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(BM_FitRidge)->Args({1000, 64})->Args({5000, 128})->Args({5000, 300});

void BM_BuildFusedTable(benchmark::State& state) {
  const auto& c = corpus();
  auto mapping = fit_ridge(align_for_mapping(c.ling, c.visual).ling,
                           align_for_mapping(c.ling, c.visual).visual, 0.6);
  auto predicted = predict_visual(c.ling, mapping);
  auto scope = static_cast<GateScope>(state.range(0));
  auto model = GateModel::initial(scope, GateForm::vector, c.ling.dim(),
                                  c.visual.dim(), {"abstractish", "concretish"}, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        build_fused_table(c.ling, predicted, model, &c.senses));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(c.ling.size()));
}
BENCHMARK(BM_BuildFusedTable)
    ->Arg(static_cast<int>(GateScope::modality))
    ->Arg(static_cast<int>(GateScope::sample));

void BM_Gradients(benchmark::State& state) {
  const auto& c = corpus();
  auto mapping = fit_ridge(align_for_mapping(c.ling, c.visual).ling,
                           align_for_mapping(c.ling, c.visual).visual, 0.6);
  auto predicted = predict_visual(c.ling, mapping);
  GateInputs in(c.ling, predicted, &c.senses);
  auto form = state.range(0) ? GateForm::vector : GateForm::value;
  auto model = GateModel::initial(GateScope::sample, form, c.ling.dim(),
                                  predicted.dim(), {}, 1);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<Eigen::Index> pick(
      0, static_cast<Eigen::Index>(in.size()) - 1);
  std::vector<TrainingExample> batch(25);
  for (auto& ex : batch) ex = {pick(rng), pick(rng), pick(rng), pick(rng)};
  for (auto _ : state) benchmark::DoNotOptimize(gradients(model, in, batch));
  state.SetItemsProcessed(state.iterations() * 25);
}
BENCHMARK(BM_Gradients)->Arg(0)->Arg(1);

void BM_Spearman(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> level(0, 50);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = level(rng);
    y[i] = level(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(spearman(x, y));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Spearman)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
