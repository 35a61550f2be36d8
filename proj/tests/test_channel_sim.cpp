#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "snsqkd/channel_sim.hpp"
#include "snsqkd/ledger_io.hpp"
#include "snsqkd/math.hpp"

using namespace snsqkd;

namespace {

RunParams field_config() {
    return parse_config_file(std::string(SNSQKD_DATA_DIR) + "/params_511km.cfg");
}

}  // namespace

TEST_CASE("vacuum pair clicks are dark-count only") {
    ChannelModel ch;
    ch.eta_a = ch.eta_b = 1e-4;
    ch.dark_rate = 3e-7;
    auto [p1, p2] = click_probabilities(0.0, 0.0, 0.7, ch);
    CHECK(p1 == doctest::Approx(ch.dark_rate).epsilon(1e-9));
    CHECK(p2 == doctest::Approx(ch.dark_rate).epsilon(1e-9));
}

TEST_CASE("perfect-visibility symmetry empties the destructive port") {
    ChannelModel ch;
    ch.eta_a = ch.eta_b = 2e-3;
    ch.dark_rate = 1e-8;
    ch.misalignment = 0.0;
    const double mu = 0.3;
    auto [p1, p2] = click_probabilities(mu, mu, 0.0, ch);
    CHECK(p2 == doctest::Approx(ch.dark_rate).epsilon(1e-9)); // dark only
    const double expected = ch.dark_rate + (1.0 - ch.dark_rate) * (1.0 - std::exp(-2.0 * ch.eta_a * mu));
    CHECK(p1 == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("click probabilities match the Poisson photon-number oracle") {
    ChannelModel ch;
    ch.eta_a = 1.2e-4;
    ch.eta_b = 0.8e-4;
    ch.dark_rate = 7e-9;
    ch.misalignment = 0.02;
    for (const double delta : {0.0, M_PI / 2.0, 2.2, M_PI}) {
        const auto [p1, p2] = click_probabilities(0.1, 0.1, delta, ch);
        const auto [o1, o2] = oracle::one_click_by_poisson_sum(0.1, 0.1, delta, ch);
        // exactly-one-click accounting
        const auto model_one_1 = p1 * (1.0 - p2);
        const auto model_one_2 = (1.0 - p1) * p2;
        CHECK(model_one_1 == doctest::Approx(o1).epsilon(1e-12));
        CHECK(model_one_2 == doctest::Approx(o2).epsilon(1e-12));
    }
}

TEST_CASE("nobody sends in Z and no darks: zz tallies are zero") {
    RunParams rp = field_config();
    rp.protocol.eps_send = 0.0;
    rp.channel.dark_rate = 0.0;
    const SimResult sim = simulate(rp.protocol, rp.channel, 200000, 5);
    CHECK(sim.ledger.detected_valid_z == 0.0);
    CHECK(sim.ledger.zz_error == 0.0);
    CHECK(sim.ledger.zz_correct == 0.0);
    CHECK(sim.ledger.sent_zz > 0.0);
}

TEST_CASE("identical seeds give identical ledgers across thread counts") {
    const RunParams rp = field_config();
    SimOptions one;
    one.n_threads = 1;
    one.windows_per_block = 1 << 16;
    SimOptions four;
    four.n_threads = 4;
    four.windows_per_block = 1 << 16;
    const SimResult a = simulate(rp.protocol, rp.channel, 500000, 99, one);
    const SimResult b = simulate(rp.protocol, rp.channel, 500000, 99, four);
    LedgerDocument da, db;
    da.counts = a.ledger;
    db.counts = b.ledger;
    CHECK(serialize_ledger(da) == serialize_ledger(db));

    SimOptions cap = one;
    cap.capture_raw_keys = true;
    const SimResult c = simulate(rp.protocol, rp.channel, 500000, 99, cap);
    SimOptions cap4 = four;
    cap4.capture_raw_keys = true;
    const SimResult d = simulate(rp.protocol, rp.channel, 500000, 99, cap4);
    CHECK(c.raw_keys.alice_bits == d.raw_keys.alice_bits);
    CHECK(c.raw_keys.bob_bits == d.raw_keys.bob_bits);
    CHECK(c.raw_keys.tags == d.raw_keys.tags);
}

TEST_CASE("detected never exceeds sent") {
    const RunParams rp = field_config();
    const SimResult sim = simulate(rp.protocol, rp.channel, 300000, 17);
    CHECK(sim.ledger.check_invariants().empty());
}

TEST_CASE("post-selection accepts about 2 ds/180 of X11 pairs") {
    RunParams rp = field_config();
    rp.protocol.pz = 0.1; // boost X statistics
    rp.protocol.p1 = 0.9;
    rp.protocol.p2 = 0.05;
    rp.channel.phase_drift_sigma = 0.5; // decorrelate the estimation blocks
    const std::uint64_t n = 400000;
    const SimResult sim = simulate(rp.protocol, rp.channel, n, 3);
    const double sent_x11 =
        sim.ledger.sent_cell(Basis::X, Basis::X, Intensity::mu1, Intensity::mu1);
    REQUIRE(sent_x11 > 1000.0);
    const double frac = sim.ledger.sent_x11_in_window / sent_x11;
    const double expect = 2.0 * rp.protocol.ds_half_deg / 180.0;
    // all X11 windows inside one estimation block share a phase estimate, so
    // acceptance is block-correlated: with 16 slices and a 20 degree window
    // the per-block acceptance is k/8 with k Bernoulli(8/9), variance 8/81/64
    const double var_block = (8.0 / 81.0) / 64.0;
    const double n_blocks = static_cast<double>(n) / 1000.0;
    const double sigma = std::sqrt(var_block / n_blocks + expect * (1.0 - expect) / sent_x11);
    CHECK(std::abs(frac - expect) < 3.0 * sigma);
}

TEST_CASE("clean channel and perfect estimation leave dark-only X11 errors") {
    RunParams rp = field_config();
    rp.protocol.pz = 0.05;
    rp.protocol.p1 = 0.95;
    rp.protocol.p2 = 0.03;
    rp.channel.phase_drift_sigma = 0.0; // perfect estimation follows
    rp.channel.misalignment = 0.0;
    rp.channel.eta_a = rp.channel.eta_b = 5e-3;
    rp.channel.dark_rate = 2e-7;
    const SimResult sim = simulate(rp.protocol, rp.channel, 6000000, 11);
    const double in_w = sim.ledger.x11_in_window[0] + sim.ledger.x11_in_window[1];
    const double corr =
        sim.ledger.x11_correct_in_window[0] + sim.ledger.x11_correct_in_window[1];
    REQUIRE(in_w > 200.0);
    const double qber = 1.0 - corr / in_w;

    // analytic expectation from the click model: window-averaged wrong-port
    // fraction is dark-driven plus the residual window misprojection
    const CountLedger exp_led = expected_ledger(rp.protocol, rp.channel, 6000000.0);
    const double exp_in = exp_led.x11_in_window[0] + exp_led.x11_in_window[1];
    const double exp_corr =
        exp_led.x11_correct_in_window[0] + exp_led.x11_correct_in_window[1];
    const double expect_qber = 1.0 - exp_corr / exp_in;
    const double sigma = std::sqrt(expect_qber * (1.0 - expect_qber) / in_w);
    CHECK(std::abs(qber - expect_qber) < 3.0 * sigma + 1e-6);

    // mirrored branches: both channels carry statistically equal tallies
    const double ch0 = sim.ledger.x11_in_window[0];
    const double ch1 = sim.ledger.x11_in_window[1];
    CHECK(std::abs(ch0 - ch1) < 5.0 * std::sqrt(ch0 + ch1) + 10.0);
}

TEST_CASE("expected ledger matches closed forms in the clean limit") {
    RunParams rp = field_config();
    rp.channel.dark_rate = 0.0;
    rp.channel.eta_a = 0.9;
    rp.channel.eta_b = 0.8;
    const double n = 1e6;
    const CountLedger led = expected_ledger(rp.protocol, rp.channel, n);

    // A-only Z windows: one-detector probability of a single coherent arm,
    // 1 - exp(-I) spread over the two ports
    const double w = n * rp.protocol.pz * rp.protocol.eps_send * rp.protocol.pz *
                     (1.0 - rp.protocol.eps_send);
    const double i_port = 0.5 * rp.channel.eta_a * rp.protocol.mu_z;
    const double p_one = 2.0 * std::exp(-i_port) * (1.0 - std::exp(-i_port));
    CHECK(led.zz_correct_a_send == doctest::Approx(w * p_one).epsilon(1e-9));

    // all-vacuum sources: every detection is dark-driven (zero here)
    CHECK(led.detected_cell(Basis::X, Basis::X, Intensity::vacuum, Intensity::vacuum) == 0.0);
    CHECK(led.zz_error_none_send == 0.0);
}

TEST_CASE("simulation frequencies converge to the expected ledger") {
    // reduced-size version of the full consistency criterion
    const RunParams rp = field_config();
    const std::uint64_t n = 10000000;
    const SimResult sim = simulate(rp.protocol, rp.channel, n, 2024);
    const CountLedger exp_led = expected_ledger(rp.protocol, rp.channel, static_cast<double>(n));
    auto within = [](double obs, double mean) {
        const double sd = std::sqrt(std::max(mean, 1.0));
        return std::abs(obs - mean) <= 5.0 * sd + 10.0;
    };
    CHECK(within(sim.ledger.sent_zz, exp_led.sent_zz));
    CHECK(within(sim.ledger.detected_valid_z, exp_led.detected_valid_z));
    CHECK(within(sim.ledger.zz_error, exp_led.zz_error));
    CHECK(within(sim.ledger.sent_x11_in_window, exp_led.sent_x11_in_window));
    CHECK(within(sim.ledger.detected_cell(Basis::Z, Basis::X, Intensity::vacuum, Intensity::mu1),
                 exp_led.detected_cell(Basis::Z, Basis::X, Intensity::vacuum, Intensity::mu1)));
}

TEST_CASE("all-vacuum sources yield dark-driven detections only") {
    RunParams rp = field_config();
    rp.protocol.eps_send = 0.0;
    rp.protocol.p1 = 0.0;
    rp.protocol.p2 = 0.0;
    const double n = 1e6;
    const CountLedger led = expected_ledger(rp.protocol, rp.channel, n);
    const double dark_one = 2.0 * rp.channel.dark_rate * (1.0 - rp.channel.dark_rate);
    const double total_det = led.detected_valid[0] + led.detected_valid[1];
    CHECK(total_det == doctest::Approx(n * dark_one).epsilon(1e-6));
}
