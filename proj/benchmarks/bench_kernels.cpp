#include <benchmark/benchmark.h>

#include "gcp/adam.hpp"
#include "gcp/cluster.hpp"
#include "gcp/grid.hpp"
#include "gcp/mttkrp.hpp"
#include "gcp/sampler.hpp"
#include "gcp/synthetic.hpp"

using namespace gcp;

namespace {

const SyntheticData& fixture() {
  static const SyntheticData data = [] {
    SyntheticSpec spec;
    spec.dims = {300, 200, 100};
    spec.rank = 5;
    spec.density = 0.01;
    spec.seed = 1;
    return generate_synthetic(spec);
  }();
  return data;
}

const SparseTensor& indexed(SearchMode mode) {
  static const SparseTensor sorted = build_nnz_index(fixture().tensor, SearchMode::sorted);
  static const SparseTensor hashed = build_nnz_index(fixture().tensor, SearchMode::hashmap);
  return mode == SearchMode::sorted ? sorted : hashed;
}

KruskalModel model_of_rank(index_t rank) {
  return random_model(fixture().tensor.dims(), rank, RngStream(2, 0), 0.0, 0.3);
}

void BM_MttkrpAllModes(benchmark::State& state) {
  const auto& x = fixture().tensor;
  const auto m = model_of_rank(static_cast<index_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mttkrp_all(x, m));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.nnz()));
}
BENCHMARK(BM_MttkrpAllModes)->Arg(5)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_SampleThenMttkrp(benchmark::State& state) {
  const auto& x = indexed(SearchMode::hashmap);
  const auto m = model_of_rank(16);
  const auto n = static_cast<std::size_t>(state.range(0));
  const SamplerConfig cfg(SamplingScheme::semi_stratified, n, n);
  std::uint64_t it = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(mttkrp_all(sample_semi_stratified(x, m, LossFunction::poisson(), cfg, RngStream(3, it++)), m));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n));
}
BENCHMARK(BM_SampleThenMttkrp)->RangeMultiplier(10)->Range(100, 100000)->Unit(benchmark::kMicrosecond);

void BM_FusedSampleMttkrp(benchmark::State& state) {
  const auto& x = indexed(SearchMode::hashmap);
  const auto m = model_of_rank(16);
  const auto n = static_cast<std::size_t>(state.range(0));
  const SamplerConfig cfg(SamplingScheme::semi_stratified, n, n);
  KruskalModel out(m.dims(), m.rank());
  std::uint64_t it = 0;
  for (auto _ : state) {
    fused_sample_mttkrp(x, m, LossFunction::poisson(), cfg, RngStream(3, it++), out);
    benchmark::DoNotOptimize(out.data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n));
}
BENCHMARK(BM_FusedSampleMttkrp)->RangeMultiplier(10)->Range(100, 100000)->Unit(benchmark::kMicrosecond);

void BM_StratifiedZeroSearch(benchmark::State& state) {
  const auto& x = indexed(static_cast<SearchMode>(state.range(0)));
  const auto m = model_of_rank(5);
  const SamplerConfig cfg(SamplingScheme::stratified, 0, 10000);
  std::uint64_t it = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_stratified(x, m, LossFunction::poisson(), cfg, RngStream(4, it++)));
  state.SetLabel(state.range(0) == static_cast<int>(SearchMode::sorted) ? "sorted" : "hashmap");
}
BENCHMARK(BM_StratifiedZeroSearch)
    ->Arg(static_cast<int>(SearchMode::sorted))
    ->Arg(static_cast<int>(SearchMode::hashmap))
    ->Unit(benchmark::kMicrosecond);

void BM_AdamStep(benchmark::State& state) {
  auto m = model_of_rank(static_cast<index_t>(state.range(0)));
  const auto g = model_of_rank(static_cast<index_t>(state.range(0)));
  AdamState s(m.size(), AdamParams{}, 0.0);
  for (auto _ : state) {
    adam_update(m, g, s);
    benchmark::DoNotOptimize(m.data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m.size()));
}
BENCHMARK(BM_AdamStep)->Arg(5)->Arg(16)->Unit(benchmark::kMicrosecond);

void BM_ClusterIteration(benchmark::State& state) {
  const auto& x = indexed(SearchMode::hashmap);
  const auto m = model_of_rank(5);
  const auto scheme = state.range(0) == 0 ? DistributionScheme::all_reduce : DistributionScheme::two_sided;
  const auto grid = grid_factorization(static_cast<std::size_t>(state.range(1)), x.dims());
  Cluster cluster(x, m, LossFunction::poisson(), SamplerConfig(SamplingScheme::stratified, 5000, 5000),
                  AdamParams{}, grid, {.scheme = scheme}, 5);
  std::uint64_t it = 0;
  for (auto _ : state) cluster.iterate(it++);
  state.SetLabel(to_string(scheme));
}
BENCHMARK(BM_ClusterIteration)->ArgsProduct({{0, 1}, {1, 4, 16}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
