// Serial reference vs OpenMP kernels.
#include <benchmark/benchmark.h>

#include "qdc/experiments.h"
#include "qdc/repeater_chain.h"

namespace {

qdc::ChainSpec chain(std::size_t segments, qdc::SwapProtocol protocol) {
  qdc::ChainSpec s;
  s.success_prob.assign(segments, 0.2);
  s.protocol = protocol;
  s.cutoff_slots = 15;
  return s;
}

void BM_ChainSerial(benchmark::State& state) {
  const auto spec = chain(static_cast<std::size_t>(state.range(0)), qdc::SwapProtocol::kParallel);
  for (auto _ : state) benchmark::DoNotOptimize(qdc::simulate_chain_serial(spec, 20000, 11));
  state.SetItemsProcessed(state.iterations() * 20000);
}

void BM_ChainOpenMP(benchmark::State& state) {
  const auto spec = chain(static_cast<std::size_t>(state.range(0)), qdc::SwapProtocol::kParallel);
  for (auto _ : state) benchmark::DoNotOptimize(qdc::simulate_chain(spec, 20000, 11));
  state.SetItemsProcessed(state.iterations() * 20000);
}

qdc::ExperimentSpec sweep_spec() {
  qdc::ExperimentSpec s;
  s.archs = {qdc::ArchTag::kFatTree, qdc::ArchTag::kClosTight, qdc::ArchTag::kQFlyFull, qdc::ArchTag::kBCube};
  s.scales = {16};
  s.workloads = {qdc::Workload::kLongRange};
  s.replicas = 4;
  s.two_q_gates = 200;
  s.system.mc_trials = 5000;
  return s;
}

void BM_SweepSerial(benchmark::State& state) {
  const auto spec = sweep_spec();
  for (auto _ : state) benchmark::DoNotOptimize(qdc::sweep_scale(spec, {false, 1}));
}

void BM_SweepOpenMP(benchmark::State& state) {
  const auto spec = sweep_spec();
  for (auto _ : state) benchmark::DoNotOptimize(qdc::sweep_scale(spec, {true, 0}));
}

}  // namespace

BENCHMARK(BM_ChainSerial)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ChainOpenMP)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepOpenMP)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
