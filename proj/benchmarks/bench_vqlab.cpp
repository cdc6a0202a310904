#include <benchmark/benchmark.h>

#include <cmath>

#include "vqlab/analysis.hpp"
#include "vqlab/mva.hpp"
#include "vqlab/queue_core.hpp"
#include "vqlab/traffic.hpp"
#include "vqlab/vq_estimator.hpp"

using namespace vqlab;

namespace {

const PacketStream& audio_stream()
{
    static const PacketStream s = [] {
        OnOffSpec spec;
        spec.n_sources = 100;
        return generate(spec, 200.0, 1);
    }();
    return s;
}

void BM_GenerateOnOff(benchmark::State& state)
{
    OnOffSpec spec;
    spec.n_sources = static_cast<std::size_t>(state.range(0));
    std::int64_t events = 0;
    for (auto _ : state) {
        const auto s = generate(spec, 100.0, 3);
        events += static_cast<std::int64_t>(s.size());
        benchmark::DoNotOptimize(s.data());
    }
    state.SetItemsProcessed(events);
}
BENCHMARK(BM_GenerateOnOff)->Arg(10)->Arg(100);

void BM_GenerateMmpp(benchmark::State& state)
{
    Mmpp3Spec spec;
    spec.n_sources = 8;
    std::int64_t events = 0;
    for (auto _ : state) {
        const auto s = generate(spec, 20.0, 3);
        events += static_cast<std::int64_t>(s.size());
        benchmark::DoNotOptimize(s.data());
    }
    state.SetItemsProcessed(events);
}
BENCHMARK(BM_GenerateMmpp);

void BM_FiniteFifo(benchmark::State& state)
{
    const auto& s = audio_stream();
    for (auto _ : state) benchmark::DoNotOptimize(simulate_finite_fifo(s, QueueParams{2e6, 15000.0}));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.size()));
}
BENCHMARK(BM_FiniteFifo);

void BM_VqBankArrivals(benchmark::State& state)
{
    const auto& s = audio_stream();
    for (auto _ : state) {
        VqBank bank(2e6, 1.76e6, 6000.0);
        WindowStats st;
        for (const auto& p : s) bank.on_arrival(p, &st);
        benchmark::DoNotOptimize(st);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.size()));
}
BENCHMARK(BM_VqBankArrivals);

// Includes the 1 ms rate ticks.
void BM_OnlineEstimator(benchmark::State& state)
{
    const auto& s = audio_stream();
    VqConfig cfg;
    cfg.window = 50.0;
    cfg.nominal_rate = 1.6e6;
    for (auto _ : state) benchmark::DoNotOptimize(run_online(s, 15000.0, 2e6, cfg, 200.0));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.size()));
}
BENCHMARK(BM_OnlineEstimator);

void BM_VarianceCurve(benchmark::State& state)
{
    const auto& s = audio_stream();
    for (auto _ : state) benchmark::DoNotOptimize(mva::measure_variance_curve(s, 0.01, 500, 0.0, 200.0));
}
BENCHMARK(BM_VarianceCurve);

void BM_DtsSearch(benchmark::State& state)
{
    mva::VarianceCurve curve;
    curve.delta = 0.001;
    for (int k = 1; k <= state.range(0); ++k) curve.values.push_back(1e6 * std::pow(k * 0.001, 1.6));
    for (auto _ : state) benchmark::DoNotOptimize(mva::dts_search(curve, 10000.0, 2e6, 1.6e6));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DtsSearch)->Arg(500)->Arg(6649);

void BM_EtaOfAlpha(benchmark::State& state)
{
    double a = 1.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(analysis::eta_of_alpha(a, 1e-6));
        a = a < 5.0 ? a + 0.01 : 1.0;
    }
}
BENCHMARK(BM_EtaOfAlpha);

void BM_GoldenSection(benchmark::State& state)
{
    for (auto _ : state) {
        benchmark::DoNotOptimize(analysis::golden_section_minimize(
            [](double u) { return analysis::operating_cost(u); }, 1e-6, 1 - 1e-6, 1e-7));
    }
}
BENCHMARK(BM_GoldenSection);

}  // namespace

BENCHMARK_MAIN();
