#include <benchmark/benchmark.h>

#include <sstream>

#include "qtrap/amortization.hpp"
#include "qtrap/manifold.hpp"
#include "qtrap/report.hpp"
#include "qtrap/simulator.hpp"
#include "qtrap/telemetry_io.hpp"

namespace {

qtrap::SimScenario grid_scenario(int batches) {
    qtrap::SimScenario s;
    s.name = "bench";
    s.energy.gamma_static = 0.4;
    s.energy.alpha_mem = 0.1;
    s.energy.phi_by_precision = {{4, 0.8}, {8, 0.4}, {16, 0.0}};
    s.hops_logical = 200;
    s.n_queries = 100;
    s.precisions = {4, 8, 16};
    for (int b = 1, i = 0; i < batches; ++i, b *= 2) s.batches.push_back(b);
    for (int p : s.precisions) {
        s.latency[p] = {0.01, p == 16 ? 0.0 : 0.02 * (16 - p)};
        s.hop_success[p] = 0.999 - 0.0005 * (16 - p) / 4.0;
        s.peak_vram_gb[p] = p * 0.5;
    }
    return s;
}

void BM_EnergyEval(benchmark::State& state) {
    const auto params = grid_scenario(1).energy_params();
    double b = 1.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(qtrap::energy_eval(params, 4, b));
        b = b < 1024.0 ? b + 1.0 : 1.0;
    }
}
BENCHMARK(BM_EnergyEval);

void BM_Simulate(benchmark::State& state) {
    const auto s = grid_scenario(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(qtrap::simulate(s));
}
BENCHMARK(BM_Simulate)->Arg(4)->Arg(9);

void BM_FitEnergyModel(benchmark::State& state) {
    const auto out = qtrap::simulate(grid_scenario(static_cast<int>(state.range(0))));
    for (auto _ : state) benchmark::DoNotOptimize(qtrap::fit_energy_model(out.records));
}
BENCHMARK(BM_FitEnergyModel)->Arg(4)->Arg(9);

void BM_DetectTrap(benchmark::State& state) {
    const auto out = qtrap::simulate(grid_scenario(1));
    const auto ladders = qtrap::build_ladders(out.records);
    for (auto _ : state) benchmark::DoNotOptimize(qtrap::detect_trap(ladders.ladders.front()));
}
BENCHMARK(BM_DetectTrap);

void BM_ScoreReport(benchmark::State& state) {
    const auto out = qtrap::simulate(grid_scenario(static_cast<int>(state.range(0))));
    qtrap::ReportOptions opts;
    opts.include_meta = false;
    for (auto _ : state) {
        auto bundle = qtrap::build_report(out.records, opts);
        benchmark::DoNotOptimize(qtrap::render_json(bundle));
    }
}
BENCHMARK(BM_ScoreReport)->Arg(4)->Arg(9);

void BM_ParseJsonl(benchmark::State& state) {
    std::ostringstream buf;
    qtrap::write_jsonl(buf, qtrap::simulate(grid_scenario(9)).records);
    const std::string text = buf.str();
    for (auto _ : state) {
        std::istringstream in(text);
        benchmark::DoNotOptimize(qtrap::parse_jsonl(in));
    }
    state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseJsonl);

}  // namespace

BENCHMARK_MAIN();
