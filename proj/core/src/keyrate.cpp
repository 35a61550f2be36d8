#include "snsqkd/keyrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "snsqkd/channel_sim.hpp"
#include "snsqkd/math.hpp"

namespace snsqkd {

double key_rate(double n1_prime, double e1ph_prime, double nt_prime, double ez_prime,
                double n_total, const SecurityParams& sec) {
    if (!(n_total > 0.0)) throw std::invalid_argument("key_rate: n_total must be > 0");
    const double secret = n1_prime * (1.0 - binary_entropy(e1ph_prime));
    const double leak_ec = sec.f * nt_prime * binary_entropy(ez_prime);
    const double leak_cor = 2.0 * std::log2(2.0 / sec.eps_cor);
    const double leak_pa = 2.0 * std::log2(1.0 / (std::sqrt(2.0) * sec.eps_pa * sec.eps_hat));
    const double r = (secret - leak_ec - leak_cor - leak_pa) / n_total;
    return std::max(0.0, r);
}

double plob_bound(double eta, PlobMode mode, double detector_eta) {
    double e = eta;
    if (mode == PlobMode::relative) e *= detector_eta;
    if (!(e > 0.0 && e <= 1.0)) throw std::domain_error("plob_bound: eta must lie in (0,1]");
    if (e == 1.0) return std::numeric_limits<double>::infinity();
    return -std::log2(1.0 - e);
}

KeyRateReport analyze_ledger(const CountLedger& ledger, const ProtocolParams& params,
                             const SecurityParams& sec, const AnalysisOptions& opt) {
    KeyRateReport rep;

    const auto ledger_bad = ledger.check_invariants();
    if (!ledger_bad.empty()) {
        std::string all = "ledger invariants violated:";
        for (const auto& m : ledger_bad) all += " " + m + ";";
        throw std::invalid_argument(all);
    }

    if (ledger.detected_valid_z > 0.0) {
        rep.qber_z_before = ledger.zz_error / ledger.detected_valid_z;
    }
    const double x11_det = ledger.x11_in_window[0] + ledger.x11_in_window[1];
    const double x11_cor = ledger.x11_correct_in_window[0] + ledger.x11_correct_in_window[1];
    if (x11_det > 0.0) rep.qber_x11 = 1.0 - x11_cor / x11_det;

    if (opt.loss_db) {
        const double eta = db_to_linear(*opt.loss_db);
        rep.plob_abs = plob_bound(eta, PlobMode::absolute);
        rep.plob_rel = plob_bound(eta, PlobMode::relative, opt.detector_eta);
    }

    auto zero_rate = [&rep](const std::string& why) {
        rep.insufficient = true;
        rep.warnings.push_back(why);
        rep.rate = 0.0;
        return rep;
    };

    // decoy chain
    const CountingRates rates = counting_rates(ledger);
    DecoyBounds bounds;
    try {
        bounds = yield_lower_bounds(rates, params, sec, !opt.rates_are_expected);
    } catch (const std::domain_error& e) {
        return zero_rate(std::string("decoy stage: ") + e.what());
    }
    untagged_bit_bounds(bounds, params, sec);
    rep.s01_lb = bounds.s01_lb;
    rep.s10_lb = bounds.s10_lb;
    rep.s1_lb = bounds.s1_lb;
    rep.n10_lb = bounds.n10_lb;
    rep.n01_lb = bounds.n01_lb;
    rep.n1_lb = bounds.n1_lb;
    for (const auto& w : bounds.warnings) rep.warnings.push_back(w);

    if (!(bounds.s1_lb > 0.0)) return zero_rate("decoy stage: s1 lower bound is zero");
    try {
        rep.e1ph_ub = phase_error_upper(rates, bounds, params, sec, !opt.rates_are_expected);
    } catch (const std::domain_error& e) {
        return zero_rate(std::string("phase-error stage: ") + e.what());
    }

    // pairing statistics: measured when supplied, otherwise from the ledger
    PairingStats pairing;
    if (opt.n_g && opt.n_odd) {
        pairing.n_g = *opt.n_g;
        pairing.n_odd = *opt.n_odd;
        pairing.ok = true;
    } else {
        pairing = estimate_pairing_stats(ledger, params);
        if (!pairing.ok) return zero_rate("pairing stage: " + pairing.reason);
        if (pairing.estimated) {
            rep.warnings.push_back("pairing observables n_g/n_odd estimated from ledger tallies");
        }
    }

    const double n_t = ledger.detected_valid_z;
    AoppFiniteKeyResult fk = aopp_finite_key(bounds.n1_lb, bounds.n10_lb, bounds.n01_lb,
                                             rep.e1ph_ub, n_t, pairing.n_g, pairing.n_odd, sec);
    rep.diag = fk.diag;
    rep.diag.n_odd_estimated = pairing.estimated;
    rep.diag.q_bob_ones = pairing.q;
    if (fk.insufficient) return zero_rate("pairing stage: " + fk.reason);
    rep.n1_prime = fk.n1_prime;
    rep.e1ph_prime = fk.e1ph_prime;

    // survived bits and their error rate
    if (opt.nt_prime && opt.ez_prime) {
        rep.nt_prime = *opt.nt_prime;
        rep.ez_prime = *opt.ez_prime;
    } else {
        const SurvivorEstimate sv = estimate_survivors(ledger, params);
        if (!sv.ok) return zero_rate("survivor stage: cannot estimate survived bits");
        rep.nt_prime = sv.n_t_prime;
        rep.ez_prime = sv.error_rate;
        rep.warnings.push_back("post-AOPP survived bits estimated from ledger tallies");
    }

    const double n_for_rate = ledger.n_total > 0.0 ? ledger.n_total : params.n_total;
    rep.rate = key_rate(rep.n1_prime, rep.e1ph_prime, rep.nt_prime, rep.ez_prime, n_for_rate, sec);
    return rep;
}

KeyRateReport analyze_window_row(const LedgerDocument& doc, const ProtocolParams& params,
                                 const SecurityParams& sec,
                                 const LedgerDocument::WindowRow& row,
                                 const AnalysisOptions& base_options) {
    CountLedger counts = doc.counts;
    ProtocolParams p = params;
    p.ds_half_deg = row.ds_half_deg;
    const bool matches_main =
        counts.ds_half_deg > 0.0 && std::abs(counts.ds_half_deg - row.ds_half_deg) < 1e-9 &&
        (counts.x11_in_window[0] + counts.x11_in_window[1]) > 0.0;
    if (!matches_main) {
        counts.ds_half_deg = row.ds_half_deg;
        counts.x11_in_window = {row.det_x11, 0.0};
        counts.x11_correct_in_window = {row.det_x11 * (1.0 - row.qber_x11), 0.0};
        counts.x22_in_window = {row.det_x22, 0.0};
        counts.x22_correct_in_window = {row.det_x22 * (1.0 - row.qber_x22), 0.0};
        counts.has_sent_in_window = false;
        counts.sent_x11_in_window = 0.0;
        counts.sent_x22_in_window = 0.0;
    }
    AnalysisOptions opt = base_options;
    if (!opt.nt_prime && doc.survived_after_aopp) opt.nt_prime = doc.survived_after_aopp;
    if (!opt.ez_prime && doc.qber_z_after) opt.ez_prime = doc.qber_z_after;
    if (!opt.loss_db && doc.fiber_loss_db) opt.loss_db = doc.fiber_loss_db;
    return analyze_ledger(counts, p, sec, opt);
}

std::vector<RateCurvePoint> simulate_rate_curve(const ProtocolParams& params_template,
                                                const ChannelModel& channel_template,
                                                double ref_loss_db,
                                                const std::vector<double>& loss_grid_db,
                                                const SecurityParams& sec, CurveMode mode,
                                                std::uint64_t seed, std::uint64_t mc_pairs,
                                                double detector_eta) {
    if (loss_grid_db.empty()) {
        throw std::invalid_argument("simulate_rate_curve: loss grid must be nonempty");
    }
    std::vector<RateCurvePoint> out;
    out.reserve(loss_grid_db.size());
    for (std::size_t i = 0; i < loss_grid_db.size(); ++i) {
        const double loss = loss_grid_db[i];
        RateCurvePoint pt;
        pt.total_loss_db = loss;
        pt.params_used = params_template;
        try {
            ChannelModel ch = channel_template;
            const double arm_scale = std::pow(10.0, -(loss - ref_loss_db) / 20.0);
            ch.eta_a = std::min(1.0, channel_template.eta_a * arm_scale);
            ch.eta_b = std::min(1.0, channel_template.eta_b * arm_scale);

            AnalysisOptions opt;
            opt.loss_db = loss;
            opt.detector_eta = detector_eta;
            CountLedger led;
            if (mode == CurveMode::expected) {
                opt.rates_are_expected = true;
                led = expected_ledger(params_template, ch);
            } else {
                const std::uint64_t pairs =
                    mc_pairs > 0 ? mc_pairs : static_cast<std::uint64_t>(params_template.n_total);
                SimOptions so;
                so.capture_raw_keys = true;
                const SimResult sim = simulate(params_template, ch, pairs, seed + i, so);
                led = sim.ledger;
                // bit-level AOPP on the simulated keys feeds measured
                // pairing observables and survivors into the chain
                try {
                    const AoppOutcome aopp = aopp_pair(sim.raw_keys, seed + i);
                    opt.n_g = static_cast<double>(aopp.n_g);
                    opt.n_odd = static_cast<double>(aopp.n_odd);
                    opt.nt_prime = static_cast<double>(aopp.n_t_prime());
                    opt.ez_prime = aopp.survived_error_rate;
                } catch (const std::invalid_argument&) {
                    // too few bits to pair; the estimator path takes over
                }
            }
            pt.report = analyze_ledger(led, params_template, sec, opt);
            pt.rate_per_pulse = pt.report.rate;
            pt.plob_abs = pt.report.plob_abs;
            pt.plob_rel = pt.report.plob_rel;
            pt.ok = true;
        } catch (const std::exception& e) {
            pt.ok = false;
            pt.error = e.what();
        }
        out.push_back(std::move(pt));
    }
    return out;
}

std::vector<double> coordinate_descent(
    const std::function<double(const std::vector<double>&)>& objective, std::vector<double> init,
    std::vector<double> initial_steps, int max_passes, double min_step_scale) {
    if (init.size() != initial_steps.size()) {
        throw std::invalid_argument("coordinate_descent: dimension mismatch");
    }
    std::vector<double> best = init;
    double best_value = objective(best);
    std::vector<double> steps = initial_steps;
    double scale = 1.0;

    for (int pass = 0; pass < max_passes && scale > min_step_scale; ++pass) {
        bool improved = false;
        for (std::size_t d = 0; d < best.size(); ++d) {
            for (const double sign : {+1.0, -1.0}) {
                std::vector<double> probe = best;
                probe[d] += sign * steps[d] * scale;
                const double v = objective(probe);
                if (v > best_value) {
                    best_value = v;
                    best = probe;
                    improved = true;
                }
            }
        }
        if (!improved) scale *= 0.5;
    }
    return best;
}

ProtocolParams optimize_params(const ChannelModel& channel, double n_total,
                               const SecurityParams& sec, const ProtocolParams& init) {
    {
        ProtocolParams check = init;
        check.n_total = n_total;
        validate_or_throw(check, channel, sec);
    }

    auto unpack = [&](const std::vector<double>& v) {
        ProtocolParams p = init;
        p.mu1 = v[0];
        p.mu2 = v[1];
        p.mu_z = v[2];
        p.p1 = v[3];
        p.p2 = v[4];
        p.pz = v[5];
        p.eps_send = v[6];
        p.ds_half_deg = v[7];
        p.n_total = n_total;
        return p;
    };

    auto objective = [&](const std::vector<double>& v) -> double {
        const ProtocolParams p = unpack(v);
        if (!validate(p, channel, sec).empty()) return -1.0;
        try {
            const CountLedger led = expected_ledger(p, channel);
            AnalysisOptions opt;
            opt.rates_are_expected = true;
            return analyze_ledger(led, p, sec, opt).rate;
        } catch (const std::exception&) {
            return -1.0;
        }
    };

    const std::vector<double> x0 = {init.mu1, init.mu2,      init.mu_z,    init.p1,
                                    init.p2,  init.pz,       init.eps_send, init.ds_half_deg};
    const std::vector<double> steps = {0.02, 0.05, 0.05, 0.04, 0.02, 0.04, 0.04, 2.0};
    const std::vector<double> best = coordinate_descent(objective, x0, steps, 40, 1e-3);

    const ProtocolParams candidate = unpack(best);
    return objective(best) >= objective(x0) ? candidate : init;
}

}  // namespace snsqkd
