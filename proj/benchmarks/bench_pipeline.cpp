#include <random>

#include <benchmark/benchmark.h>

#include "riskflow/runtime.hpp"
#include "riskflow/simharness.hpp"

using namespace riskflow;

namespace {

const sim::GeneratedStream& stream16() {
    static const sim::GeneratedStream s = [] {
        sim::ScenarioSpec spec;
        spec.n_events = 20'000;
        spec.feature_dim = 16;
        spec.true_intercept = -1.0;
        spec.label_delay_events = 100;
        spec.seed = 5;
        std::mt19937_64 rng(5);
        std::normal_distribution<double> g(0.0, 0.5);
        for (int i = 0; i < 16; ++i) spec.true_coefficients.push_back(g(rng));
        return sim::generate_stream(spec);
    }();
    return s;
}

}  // namespace

static void BM_ReferenceExecute(benchmark::State& state) {
    const auto& s = stream16();
    const EngineConfig config = sim::default_config(16);
    for (auto _ : state) {
        benchmark::DoNotOptimize(reference_execute(s.events, config));
    }
    state.SetItemsProcessed(state.iterations() * 20'000);
}
BENCHMARK(BM_ReferenceExecute)->Unit(benchmark::kMillisecond);

static void BM_PipelineDeterministic(benchmark::State& state) {
    const auto& s = stream16();
    const EngineConfig config = sim::default_config(16);
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_pipeline(s.events, config));
    }
    state.SetItemsProcessed(state.iterations() * 20'000);
}
BENCHMARK(BM_PipelineDeterministic)->Unit(benchmark::kMillisecond)->UseRealTime();

static void BM_PipelineConcurrent(benchmark::State& state) {
    const auto& s = stream16();
    EngineConfig config = sim::default_config(16);
    config.deterministic_mode = false;
    config.scoring_shards = static_cast<std::size_t>(state.range(0));
    double p99 = 0.0;
    for (auto _ : state) {
        PipelineRun run = run_pipeline(s.events, config);
        p99 = measure_latency(run.stats).p99_us;
    }
    state.counters["p99_us"] = p99;
    state.SetItemsProcessed(state.iterations() * 20'000);
}
BENCHMARK(BM_PipelineConcurrent)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
