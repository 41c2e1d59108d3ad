#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "riskflow/feedback.hpp"
#include "riskflow/ingest.hpp"
#include "riskflow/scoring.hpp"

using namespace riskflow;

namespace {

ScorerParams random_params(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    ScorerParams p = ScorerParams::neutral(n);
    for (std::size_t i = 0; i < n; ++i) {
        p.coefficients[i] = g(rng);
        p.fusion_coefficients[i] = 0.1 * g(rng);
    }
    p.fusion_gain = 0.3;
    return p;
}

}  // namespace

static void BM_Normalize(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    FeatureNormalizer norm(n, 1000);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 1.0);
    ApplicantEvent e{"a", 0, std::vector<double>(n)};
    for (auto _ : state) {
        ++e.event_time_ms;
        for (double& x : e.raw_features) x = g(rng);
        benchmark::DoNotOptimize(norm.accept(e));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Normalize)->Arg(4)->Arg(16)->Arg(64);

static void BM_Assess(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(2);
    ScorerParams p = random_params(n, rng);
    ScorerEnsemble ens(4, p);
    for (int k = 0; k < 3; ++k) {
        ScorerParams q = random_params(n, rng);
        q.version = static_cast<std::uint64_t>(k + 1);
        ens = ens.with_published(q);
    }
    std::vector<double> f(n, 0.5);
    const FeatureFrame frame = synthesize_features("a", f, ens.newest());
    for (auto _ : state) {
        benchmark::DoNotOptimize(assess(frame, ens.newest(), ens));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Assess)->Arg(4)->Arg(16)->Arg(64);

static void BM_SgdUpdate(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(3);
    ScorerParams p = random_params(n, rng);
    std::vector<double> f(n, 0.25);
    const FeatureFrame frame = synthesize_features(f, p);
    int label = 0;
    for (auto _ : state) {
        p = sgd_update(p, frame, label ^= 1, 0.01);
        benchmark::DoNotOptimize(p);
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SgdUpdate)->Arg(4)->Arg(16)->Arg(64);
