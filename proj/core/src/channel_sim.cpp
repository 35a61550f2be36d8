#include "snsqkd/channel_sim.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>
#include <thread>
#include <vector>

#include "snsqkd/math.hpp"
#include "snsqkd/rng.hpp"

namespace snsqkd {

namespace {

// Effective 100 MHz window rate: 10 ns between successive pulse pairs.
constexpr double kWindowDtUs = 0.01;

double mean_photon(Intensity i, const ProtocolParams& p) {
    switch (i) {
        case Intensity::vacuum: return 0.0;
        case Intensity::mu1: return p.mu1;
        case Intensity::mu2: return p.mu2;
        case Intensity::mu_z: return p.mu_z;
    }
    return 0.0;
}

struct PortProbs {
    double d1 = 0.0; ///< exactly D1 clicks
    double d2 = 0.0; ///< exactly D2 clicks
    double both = 0.0;
};

PortProbs port_probs(double mu_a, double mu_b, double delta, const ChannelModel& ch) {
    const double ia = ch.eta_a * mu_a;
    const double ib = ch.eta_b * mu_b;
    const double mean = 0.5 * (ia + ib);
    const double interference = std::sqrt(ia * ib) * std::cos(delta);
    double i_plus = mean + interference;
    double i_minus = mean - interference;
    // Guard against rounding pushing the destructive port slightly negative.
    i_plus = std::max(0.0, i_plus);
    i_minus = std::max(0.0, i_minus);
    const double m = ch.misalignment;
    const double i1 = (1.0 - m) * i_plus + m * i_minus;
    const double i2 = (1.0 - m) * i_minus + m * i_plus;
    const double d = ch.dark_rate;
    const double p1 = d + (1.0 - d) * (-std::expm1(-i1));
    const double p2 = d + (1.0 - d) * (-std::expm1(-i2));
    return {p1 * (1.0 - p2), (1.0 - p1) * p2, p1 * p2};
}

}  // namespace

std::pair<double, double> click_probabilities(double mu_a, double mu_b, double delta,
                                              const ChannelModel& channel) {
    const double ia = channel.eta_a * mu_a;
    const double ib = channel.eta_b * mu_b;
    const double mean = 0.5 * (ia + ib);
    const double interference = std::sqrt(ia * ib) * std::cos(delta);
    const double i_plus = std::max(0.0, mean + interference);
    const double i_minus = std::max(0.0, mean - interference);
    const double m = channel.misalignment;
    const double i1 = (1.0 - m) * i_plus + m * i_minus;
    const double i2 = (1.0 - m) * i_minus + m * i_plus;
    const double d = channel.dark_rate;
    return {d + (1.0 - d) * (-std::expm1(-i1)), d + (1.0 - d) * (-std::expm1(-i2))};
}

std::pair<double, double> click_probabilities(const PulseChoice& a, const PulseChoice& b,
                                              double psi, const ProtocolParams& params,
                                              const ChannelModel& channel) {
    const double slice = kTwoPi / params.n_phase_slices;
    const double delta = slice * (a.phase_slice - b.phase_slice) - psi;
    return click_probabilities(mean_photon(a.intensity, params), mean_photon(b.intensity, params),
                               delta, channel);
}

namespace {

struct SimContext {
    const ProtocolParams& params;
    const ChannelModel& channel;
    bool capture;
    // side-choice thresholds for a single uniform draw
    double t_z_send, t_z, t_x_vac, t_x_mu1;
    double lambda;       // post-selection threshold 1-cos(ds_half)
    double sigma_est;    // phase-estimate noise std
    std::uint64_t windows_per_est_block;
    double slice_angle;
    double exp_neg_muz;  // Poisson sampling constant

    explicit SimContext(const ProtocolParams& p, const ChannelModel& c, bool cap)
        : params(p), channel(c), capture(cap) {
        t_z_send = p.pz * p.eps_send;
        t_z = p.pz;
        t_x_vac = p.pz + (1.0 - p.pz) * p.p0();
        t_x_mu1 = t_x_vac + (1.0 - p.pz) * p.p1;
        lambda = 1.0 - std::cos(p.ds_half_deg * kTwoPi / 360.0);
        sigma_est = 0.5 * c.phase_drift_sigma * c.ref_block_us;
        windows_per_est_block =
            std::max<std::uint64_t>(1, static_cast<std::uint64_t>(c.ref_block_us / kWindowDtUs));
        slice_angle = kTwoPi / p.n_phase_slices;
        exp_neg_muz = std::exp(-p.mu_z);
    }
};

struct BlockResult {
    CountLedger ledger;
    std::vector<std::uint8_t> alice, bob, tags;
};

PulseChoice draw_choice(Xoshiro256& rng, const SimContext& ctx, bool is_alice) {
    PulseChoice c;
    const double u = rng.u01();
    if (u < ctx.t_z) {
        c.basis = Basis::Z;
        if (u < ctx.t_z_send) {
            c.intensity = Intensity::mu_z;
            c.z_bit = is_alice ? 1 : 0;
        } else {
            c.intensity = Intensity::vacuum;
            c.z_bit = is_alice ? 0 : 1;
        }
    } else {
        c.basis = Basis::X;
        if (u < ctx.t_x_vac) {
            c.intensity = Intensity::vacuum;
        } else {
            c.intensity = (u < ctx.t_x_mu1) ? Intensity::mu1 : Intensity::mu2;
            c.phase_slice = static_cast<int>(rng.below(ctx.params.n_phase_slices));
        }
    }
    return c;
}

int poisson_draw(Xoshiro256& rng, double exp_neg_mu) {
    int k = 0;
    double p = 1.0;
    do {
        ++k;
        p *= rng.u01();
    } while (p > exp_neg_mu);
    return k - 1;
}

/// Outcome of one uniform draw against a 4-way split (none, d1, d2, both).
DetectionRecord::Which outcome_from(double u, double p_d1, double p_d2, double p_both) {
    const double p_none = 1.0 - p_d1 - p_d2 - p_both;
    if (u < p_none) return DetectionRecord::Which::none;
    if (u < p_none + p_d1) return DetectionRecord::Which::d1;
    if (u < p_none + p_d1 + p_d2) return DetectionRecord::Which::d2;
    return DetectionRecord::Which::both;
}

/// Fock-resolved single-sender outcome: photon number m through arm eta,
/// 50/50 split, darks folded in. Identical in distribution to the coherent
/// closed form after Poisson averaging, but exposes m for untagged-bit tags.
DetectionRecord::Which single_arm_outcome(Xoshiro256& rng, int m, double eta, double dark) {
    const double q_none_gamma = std::pow(1.0 - eta, m);
    const double q_d1_gamma = std::pow(1.0 - 0.5 * eta, m) - q_none_gamma; // photons only at D1
    const double q_d2_gamma = q_d1_gamma;
    const double q_both_gamma = 1.0 - 2.0 * (q_d1_gamma + q_none_gamma) + q_none_gamma;
    const double d = dark;
    // fold in independent darks
    const double p_d1 = (1.0 - d) * (q_d1_gamma + d * q_none_gamma);
    const double p_d2 = (1.0 - d) * (q_d2_gamma + d * q_none_gamma);
    const double p_both = q_both_gamma + q_d1_gamma * d + q_d2_gamma * d + q_none_gamma * d * d;
    return outcome_from(rng.u01(), p_d1, p_d2, p_both);
}

void run_block(std::uint64_t block_index, std::uint64_t n_windows, std::uint64_t seed,
               const SimContext& ctx, BlockResult& out) {
    Xoshiro256 rng(seed, block_index);
    CountLedger& led = out.ledger;
    led.ds_half_deg = ctx.params.ds_half_deg;
    led.has_z_split = true;
    led.has_sent_in_window = true;

    DriftState drift{rng.u01() * kTwoPi, block_index};
    double drift_rate = 0.0;
    double psi_est = 0.0;
    std::uint64_t window_in_est_block = ctx.windows_per_est_block; // force refresh at start

    for (std::uint64_t w = 0; w < n_windows; ++w) {
        if (window_in_est_block >= ctx.windows_per_est_block) {
            // new estimation block: fresh drift rate, fresh reference estimate
            drift_rate = rng.gaussian() * ctx.channel.phase_drift_sigma;
            psi_est = wrap_angle(drift.phase_offset + rng.gaussian() * ctx.sigma_est);
            window_in_est_block = 0;
        }
        const PulseChoice a = draw_choice(rng, ctx, true);
        const PulseChoice b = draw_choice(rng, ctx, false);
        const double psi = drift.phase_offset;

        led.sent_cell(a.basis, b.basis, a.intensity, b.intensity) += 1.0;
        const bool zz = a.basis == Basis::Z && b.basis == Basis::Z;
        if (zz) led.sent_zz += 1.0;

        const bool xx11 = a.basis == Basis::X && b.basis == Basis::X &&
                          a.intensity == Intensity::mu1 && b.intensity == Intensity::mu1;
        const bool xx22 = a.basis == Basis::X && b.basis == Basis::X &&
                          a.intensity == Intensity::mu2 && b.intensity == Intensity::mu2;

        // sender-side post-selection tally (uses the estimate, like the users would)
        double delta_sel = 0.0;
        bool in_window = false;
        if (xx11 || xx22) {
            delta_sel = ctx.slice_angle * (a.phase_slice - b.phase_slice) - psi_est;
            in_window = (1.0 - std::abs(std::cos(delta_sel)) <= ctx.lambda);
            if (in_window) {
                if (xx11) led.sent_x11_in_window += 1.0;
                else led.sent_x22_in_window += 1.0;
            }
        }

        const double mu_a = mean_photon(a.intensity, ctx.params);
        const double mu_b = mean_photon(b.intensity, ctx.params);
        const bool a_light = mu_a > 0.0;
        const bool b_light = mu_b > 0.0;

        DetectionRecord::Which which;
        int fock_m = -1;
        if (zz && (a_light != b_light)) {
            // single sender in a Z window: photon-number resolved for tags
            fock_m = poisson_draw(rng, ctx.exp_neg_muz);
            const double eta = a_light ? ctx.channel.eta_a : ctx.channel.eta_b;
            which = single_arm_outcome(rng, fock_m, eta, ctx.channel.dark_rate);
        } else {
            double delta;
            if (a_light && b_light) {
                if (a.basis == Basis::X && b.basis == Basis::X) {
                    delta = ctx.slice_angle * (a.phase_slice - b.phase_slice) - psi;
                } else {
                    // at least one phase-randomized Z pulse: fully random phase
                    delta = rng.u01() * kTwoPi;
                }
            } else {
                delta = 0.0; // no interference term
            }
            const PortProbs pp = port_probs(mu_a, mu_b, delta, ctx.channel);
            which = outcome_from(rng.u01(), pp.d1, pp.d2, pp.both);
        }

        const bool one_det =
            which == DetectionRecord::Which::d1 || which == DetectionRecord::Which::d2;
        if (one_det) {
            const int ch = which == DetectionRecord::Which::d1 ? 0 : 1;
            led.detected_valid[ch] += 1.0;
            led.detected_cell(a.basis, b.basis, a.intensity, b.intensity) += 1.0;
            if (zz) {
                led.detected_valid_z += 1.0;
                const bool error = a.z_bit != b.z_bit;
                if (error) led.zz_error += 1.0;
                else led.zz_correct += 1.0;
                if (a_light && b_light) led.zz_error_both_send += 1.0;
                else if (!a_light && !b_light) led.zz_error_none_send += 1.0;
                else if (a_light) led.zz_correct_a_send += 1.0;
                else led.zz_correct_b_send += 1.0;
                if (ctx.capture) {
                    out.alice.push_back(static_cast<std::uint8_t>(a.z_bit));
                    out.bob.push_back(static_cast<std::uint8_t>(b.z_bit));
                    out.tags.push_back(static_cast<std::uint8_t>(fock_m == 1 ? 1 : 0));
                }
            }
            if (in_window) {
                // correct detector: constructive port for the selected branch
                const int correct_ch = std::cos(delta_sel) > 0.0 ? 0 : 1;
                if (xx11) {
                    led.x11_in_window[ch] += 1.0;
                    if (ch == correct_ch) led.x11_correct_in_window[ch] += 1.0;
                } else {
                    led.x22_in_window[ch] += 1.0;
                    if (ch == correct_ch) led.x22_correct_in_window[ch] += 1.0;
                }
            }
        }

        drift.phase_offset = wrap_angle(drift.phase_offset + drift_rate * kWindowDtUs);
        ++window_in_est_block;
    }
    led.n_total = static_cast<double>(n_windows);
}

}  // namespace

SimResult simulate(const ProtocolParams& params, const ChannelModel& channel,
                   std::uint64_t n_pairs, std::uint64_t seed, const SimOptions& options) {
    if (n_pairs < 1) throw std::invalid_argument("simulate: n_pairs must be >= 1");
    SimContext ctx(params, channel, options.capture_raw_keys);

    std::uint64_t block = options.windows_per_block;
    const std::uint64_t est = ctx.windows_per_est_block;
    block = std::max<std::uint64_t>(est, (block / est) * est);
    const std::uint64_t n_blocks = (n_pairs + block - 1) / block;

    std::vector<BlockResult> results(n_blocks);
    const int n_threads = std::max(1, options.n_threads);

    auto worker = [&](int t) {
        for (std::uint64_t i = t; i < n_blocks; i += static_cast<std::uint64_t>(n_threads)) {
            const std::uint64_t lo = i * block;
            const std::uint64_t n = std::min(block, n_pairs - lo);
            run_block(i, n, seed, ctx, results[i]);
        }
    };

    if (n_threads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker, t);
        for (auto& th : pool) th.join();
    }

    SimResult out;
    out.has_raw_keys = options.capture_raw_keys;
    for (std::uint64_t i = 0; i < n_blocks; ++i) {
        out.ledger += results[i].ledger;
        if (options.capture_raw_keys) {
            auto& r = results[i];
            out.raw_keys.alice_bits.insert(out.raw_keys.alice_bits.end(), r.alice.begin(), r.alice.end());
            out.raw_keys.bob_bits.insert(out.raw_keys.bob_bits.end(), r.bob.begin(), r.bob.end());
            out.raw_keys.tags.insert(out.raw_keys.tags.end(), r.tags.begin(), r.tags.end());
        }
    }
    return out;
}

namespace {

struct SideState {
    Basis basis;
    Intensity intensity;
    double weight;
};

/// Phase-averaged one-click probabilities (both ports). Midpoint rule over a
/// full period converges spectrally for this smooth periodic integrand.
PortProbs phase_averaged_ports(double mu_a, double mu_b, const ChannelModel& ch) {
    if (!(mu_a > 0.0) || !(mu_b > 0.0)) {
        return port_probs(mu_a, mu_b, 0.0, ch);
    }
    constexpr int kN = 512;
    PortProbs acc;
    for (int i = 0; i < kN; ++i) {
        const double delta = kTwoPi * (i + 0.5) / kN;
        const PortProbs p = port_probs(mu_a, mu_b, delta, ch);
        acc.d1 += p.d1;
        acc.d2 += p.d2;
        acc.both += p.both;
    }
    acc.d1 /= kN;
    acc.d2 /= kN;
    acc.both /= kN;
    return acc;
}

/// Expected in-window per-branch click probabilities for an accepted X pair.
/// J1 = mean exactly-D1 (constructive-port) probability over the accepted
/// branch around delta = 0 including estimation noise and intra-block drift,
/// J2 = mean exactly-D2 probability.
std::pair<double, double> window_branch_probs(double mu, const ProtocolParams& params,
                                              const ChannelModel& ch) {
    const double ds = params.ds_half_deg * kTwoPi / 360.0;
    const double sigma_est = 0.5 * ch.phase_drift_sigma * ch.ref_block_us;
    constexpr int kNd = 32;  // selected phase within the window
    constexpr int kNt = 16;  // window position inside the estimation block
    constexpr int kNg = 41;  // Gaussian residual quadrature
    double j1 = 0.0, j2 = 0.0;
    for (int it = 0; it < kNt; ++it) {
        const double tau = ch.ref_block_us * (it + 0.5) / kNt;
        const double s2 = sigma_est * sigma_est +
                          ch.phase_drift_sigma * ch.phase_drift_sigma * tau * tau;
        const double s = std::sqrt(s2);
        for (int ig = 0; ig < kNg; ++ig) {
            double gw, delta_err;
            if (s == 0.0) {
                if (ig != 0) continue;
                gw = 1.0;
                delta_err = 0.0;
            } else {
                const double x = -5.0 + 10.0 * ig / (kNg - 1);
                gw = std::exp(-0.5 * x * x);
                delta_err = s * x;
            }
            for (int id = 0; id < kNd; ++id) {
                const double dsel = -ds + 2.0 * ds * (id + 0.5) / kNd;
                const PortProbs p = port_probs(mu, mu, dsel + delta_err, ch);
                j1 += gw * p.d1;
                j2 += gw * p.d2;
            }
        }
    }
    // normalize the Gaussian weights and the uniform tau/delta averages
    double wsum = 0.0;
    for (int ig = 0; ig < kNg; ++ig) {
        const double x = -5.0 + 10.0 * ig / (kNg - 1);
        wsum += std::exp(-0.5 * x * x);
    }
    const double sigma_norm = (sigma_est == 0.0 && ch.phase_drift_sigma == 0.0) ? 1.0 : wsum;
    const double norm = sigma_norm * kNt * kNd;
    return {j1 / norm, j2 / norm};
}

}  // namespace

CountLedger expected_ledger(const ProtocolParams& params, const ChannelModel& channel,
                            double n_pairs) {
    const double n = n_pairs > 0.0 ? n_pairs : params.n_total;
    if (!(n > 0.0)) throw std::invalid_argument("expected_ledger: pulse-pair count must be > 0");

    CountLedger led;
    led.n_total = n;
    led.ds_half_deg = params.ds_half_deg;
    led.has_z_split = true;
    led.has_sent_in_window = true;

    const SideState states[5] = {
        {Basis::Z, Intensity::mu_z, params.pz * params.eps_send},
        {Basis::Z, Intensity::vacuum, params.pz * (1.0 - params.eps_send)},
        {Basis::X, Intensity::vacuum, (1.0 - params.pz) * params.p0()},
        {Basis::X, Intensity::mu1, (1.0 - params.pz) * params.p1},
        {Basis::X, Intensity::mu2, (1.0 - params.pz) * params.p2},
    };

    for (const auto& sa : states) {
        for (const auto& sb : states) {
            const double w = n * sa.weight * sb.weight;
            if (w == 0.0) continue;
            const double mu_a = mean_photon(sa.intensity, params);
            const double mu_b = mean_photon(sb.intensity, params);
            const PortProbs p = phase_averaged_ports(mu_a, mu_b, channel);
            const double one = p.d1 + p.d2;

            led.sent_cell(sa.basis, sb.basis, sa.intensity, sb.intensity) += w;
            led.detected_cell(sa.basis, sb.basis, sa.intensity, sb.intensity) += w * one;
            led.detected_valid[0] += w * p.d1;
            led.detected_valid[1] += w * p.d2;

            if (sa.basis == Basis::Z && sb.basis == Basis::Z) {
                led.sent_zz += w;
                led.detected_valid_z += w * one;
                const bool a_light = mu_a > 0.0;
                const bool b_light = mu_b > 0.0;
                if (a_light && b_light) led.zz_error_both_send += w * one;
                else if (!a_light && !b_light) led.zz_error_none_send += w * one;
                else if (a_light) led.zz_correct_a_send += w * one;
                else led.zz_correct_b_send += w * one;
            }
        }
    }
    led.zz_error = led.zz_error_both_send + led.zz_error_none_send;
    led.zz_correct = led.zz_correct_a_send + led.zz_correct_b_send;

    // Phase post-selected decoy-pair tallies. Both mirrored branches carry
    // the same statistics, so each channel sees (J1+J2)/2 of the accepted
    // detections and J1/2 of the correct ones, times the two branches.
    const double accept = 4.0 * params.ds_half_deg / 360.0;
    const double w_x11 = n * states[3].weight * states[3].weight;
    const double w_x22 = n * states[4].weight * states[4].weight;
    led.sent_x11_in_window = w_x11 * accept;
    led.sent_x22_in_window = w_x22 * accept;

    const auto [j1_11, j2_11] = window_branch_probs(params.mu1, params, channel);
    const auto [j1_22, j2_22] = window_branch_probs(params.mu2, params, channel);
    for (int ch = 0; ch < 2; ++ch) {
        led.x11_in_window[ch] = 0.5 * w_x11 * accept * (j1_11 + j2_11);
        led.x11_correct_in_window[ch] = 0.5 * w_x11 * accept * j1_11;
        led.x22_in_window[ch] = 0.5 * w_x22 * accept * (j1_22 + j2_22);
        led.x22_correct_in_window[ch] = 0.5 * w_x22 * accept * j1_22;
    }
    return led;
}

}  // namespace snsqkd
