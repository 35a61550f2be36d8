#include <benchmark/benchmark.h>

#include <random>

#include "snsqkd/aopp.hpp"
#include "snsqkd/channel_sim.hpp"
#include "snsqkd/keyrate.hpp"
#include "snsqkd/ledger_io.hpp"

using namespace snsqkd;

namespace {
const LedgerDocument& field_ledger() {
    static const LedgerDocument doc =
        parse_ledger_file(std::string(SNSQKD_DATA_DIR) + "/jinan_qingdao_511km.ledger");
    return doc;
}
RunParams field_config() {
    static const RunParams rp =
        parse_config_file(std::string(SNSQKD_DATA_DIR) + "/params_511km.cfg");
    return rp;
}
}  // namespace

static void BM_ReplayPipeline(benchmark::State& state) {
    const LedgerDocument& doc = field_ledger();
    const RunParams rp = field_config();
    AnalysisOptions opt;
    opt.nt_prime = doc.survived_after_aopp;
    opt.ez_prime = doc.qber_z_after;
    for (auto _ : state) {
        const KeyRateReport rep = analyze_ledger(doc.counts, rp.protocol, rp.security, opt);
        benchmark::DoNotOptimize(rep.rate);
    }
}
BENCHMARK(BM_ReplayPipeline);

static void BM_AoppPairing(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    RawKeyPair raw;
    raw.alice_bits.reserve(n);
    raw.bob_bits.reserve(n);
    std::mt19937_64 gen(7);
    for (std::size_t i = 0; i < n; ++i) {
        const int b = gen() & 1;
        raw.bob_bits.push_back(b);
        raw.alice_bits.push_back((gen() % 100 < 24) ? 1 - b : b);
    }
    std::uint64_t seed = 0;
    for (auto _ : state) {
        const AoppOutcome out = aopp_pair(raw, seed++);
        benchmark::DoNotOptimize(out.n_t_prime());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_AoppPairing)->Arg(1 << 16)->Arg(1 << 21);

static void BM_ExpectedModeObjective(benchmark::State& state) {
    const RunParams rp = field_config();
    AnalysisOptions opt;
    opt.rates_are_expected = true;
    for (auto _ : state) {
        const CountLedger led = expected_ledger(rp.protocol, rp.channel);
        const KeyRateReport rep = analyze_ledger(led, rp.protocol, rp.security, opt);
        benchmark::DoNotOptimize(rep.rate);
    }
}
BENCHMARK(BM_ExpectedModeObjective);
