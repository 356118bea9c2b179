#include "auxsel/em.hpp"
#include "auxsel/infomat.hpp"
#include "auxsel/simlab.hpp"

#include <benchmark/benchmark.h>

using namespace auxsel;

namespace {

struct InfoFixture {
  Dataset data;
  FullParams beta;

  static const InfoFixture& get() {
    static const InfoFixture f = [] {
      const Dataset d = case_view(generate(TrueModelSpec{}, 20000, 11), 1).without_z();
      EmOptions o;
      o.seed = 11;
      return InfoFixture{d, fit_em_b(d, o).params};
    }();
    return f;
  }
};

void BM_EstimateInfoSerial(benchmark::State& state) {
  const auto& f = InfoFixture::get();
  for (auto _ : state) benchmark::DoNotOptimize(estimate_info_serial(f.data, f.beta, f.beta.theta));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(f.data.size()));
}

void BM_EstimateInfoParallel(benchmark::State& state) {
  const auto& f = InfoFixture::get();
  InfoOptions o;
  o.workers = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_info(f.data, f.beta, f.beta.theta, o));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(f.data.size()));
}

ExperimentConfig replicate_config(int workers) {
  ExperimentConfig c;
  c.T = 64;
  c.n_list = {100};
  c.workers = workers;
  return c;
}

void BM_ReplicatesSerial(benchmark::State& state) {
  const ExperimentConfig c = replicate_config(1);
  for (auto _ : state) benchmark::DoNotOptimize(run_replicates_serial(c, 100, {1, 2}));
}

void BM_ReplicatesParallel(benchmark::State& state) {
  const ExperimentConfig c = replicate_config(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_replicates(c, 100, {1, 2}));
}

}  // namespace

BENCHMARK(BM_EstimateInfoSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EstimateInfoParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReplicatesSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReplicatesParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
