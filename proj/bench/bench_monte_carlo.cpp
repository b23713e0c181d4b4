#include <benchmark/benchmark.h>

#include "rcl/harness.hpp"

namespace {

rcl::ExperimentConfig bench_config(std::uint64_t trials) {
    rcl::ExperimentConfig c;
    c.n = 5;
    c.f = 2;
    c.pi.n = 5;
    c.pi.f = 2;
    c.pi.crash_prob = 0.05;
    c.trials = trials;
    c.seed = 1;
    return c;
}

void BM_TrialsSerial(benchmark::State& state) {
    const auto cfg = bench_config(static_cast<std::uint64_t>(state.range(0)));
    const auto profile = cfg.honest_profile();
    for (auto _ : state) benchmark::DoNotOptimize(rcl::run_trials_serial(cfg, profile));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_TrialsParallel(benchmark::State& state) {
    const auto cfg = bench_config(static_cast<std::uint64_t>(state.range(0)));
    const auto profile = cfg.honest_profile();
    for (auto _ : state) benchmark::DoNotOptimize(rcl::run_trials_parallel(cfg, profile));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_DeviationGain(benchmark::State& state) {
    auto cfg = bench_config(2000);
    cfg.deviation = rcl::strategy_spec_from_json(
        rcl::Json::parse(R"({"deviator":0,"kind":"pretend_crash","round":2})"), 5);
    const auto exec = state.range(0) == 0 ? rcl::Execution::serial : rcl::Execution::parallel;
    for (auto _ : state) benchmark::DoNotOptimize(rcl::deviation_gain(cfg, exec));
    state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}

}  // namespace

BENCHMARK(BM_TrialsSerial)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrialsParallel)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_DeviationGain)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
