#include <benchmark/benchmark.h>

#include "snsqkd/channel_sim.hpp"
#include "snsqkd/ledger_io.hpp"

using namespace snsqkd;

namespace {
RunParams field_config() {
    static const RunParams rp =
        parse_config_file(std::string(SNSQKD_DATA_DIR) + "/params_511km.cfg");
    return rp;
}
}  // namespace

static void BM_SimulateWindows(benchmark::State& state) {
    const RunParams rp = field_config();
    const auto n = static_cast<std::uint64_t>(state.range(0));
    std::uint64_t seed = 1;
    for (auto _ : state) {
        const SimResult r = simulate(rp.protocol, rp.channel, n, seed++);
        benchmark::DoNotOptimize(r.ledger.detected_valid_z);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_SimulateWindows)->Arg(1 << 18)->Arg(1 << 21);

static void BM_ClickProbabilities(benchmark::State& state) {
    const RunParams rp = field_config();
    double delta = 0.0;
    for (auto _ : state) {
        delta += 1e-3;
        benchmark::DoNotOptimize(click_probabilities(0.1, 0.1, delta, rp.channel));
    }
}
BENCHMARK(BM_ClickProbabilities);

static void BM_ExpectedLedger(benchmark::State& state) {
    const RunParams rp = field_config();
    for (auto _ : state) {
        const CountLedger led = expected_ledger(rp.protocol, rp.channel);
        benchmark::DoNotOptimize(led.detected_valid_z);
    }
}
BENCHMARK(BM_ExpectedLedger);

BENCHMARK_MAIN();
