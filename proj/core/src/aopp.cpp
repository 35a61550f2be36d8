#include "snsqkd/aopp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "snsqkd/chernoff.hpp"
#include "snsqkd/rng.hpp"

namespace snsqkd {

namespace {

void fisher_yates(std::vector<std::uint32_t>& v, Xoshiro256& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = rng.below(i);
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace

AoppOutcome aopp_pair(const RawKeyPair& raw, std::uint64_t seed) {
    const std::size_t n_t = raw.size();
    if (raw.bob_bits.size() != n_t) {
        throw std::invalid_argument("aopp_pair: bit strings must have equal length");
    }
    if (n_t < 2) throw std::invalid_argument("aopp_pair: need at least two bits");

    std::vector<std::uint32_t> ones, zeros;
    ones.reserve(n_t / 2);
    zeros.reserve(n_t / 2);
    for (std::size_t i = 0; i < n_t; ++i) {
        (raw.bob_bits[i] ? ones : zeros).push_back(static_cast<std::uint32_t>(i));
    }
    if (ones.empty() || zeros.empty()) {
        throw std::invalid_argument("aopp_pair: Bob's string has no 0s or no 1s, no pairs possible");
    }

    Xoshiro256 rng(seed);
    fisher_yates(ones, rng);
    fisher_yates(zeros, rng);

    AoppOutcome out;
    out.n_g = std::min(ones.size(), zeros.size());
    out.alice_out.reserve(out.n_g);
    out.bob_out.reserve(out.n_g);
    out.pairs.reserve(out.n_g);
    for (std::uint64_t p = 0; p < out.n_g; ++p) {
        const std::uint32_t i1 = ones[p];  // Bob bit 1
        const std::uint32_t i0 = zeros[p]; // Bob bit 0
        out.pairs.emplace_back(i1, i0);
        const int parity = raw.alice_bits[i1] ^ raw.alice_bits[i0];
        if (parity == 1) {
            // keep the first element of the pair
            out.alice_out.push_back(raw.alice_bits[i1]);
            out.bob_out.push_back(raw.bob_bits[i1]);
            if (raw.alice_bits[i1] != raw.bob_bits[i1]) ++out.n_errors;
        }
    }
    out.survived_error_rate =
        out.alice_out.empty() ? 0.0 : static_cast<double>(out.n_errors) / out.alice_out.size();

    // n_odd: random two-by-two grouping of Bob's full string
    std::vector<std::uint32_t> order(n_t);
    std::iota(order.begin(), order.end(), 0u);
    fisher_yates(order, rng);
    for (std::size_t p = 0; p + 1 < n_t; p += 2) {
        if ((raw.bob_bits[order[p]] ^ raw.bob_bits[order[p + 1]]) == 1) ++out.n_odd;
    }
    return out;
}

AoppFiniteKeyResult aopp_finite_key(double n1_lb, double n10_lb, double n01_lb,
                                    double e1ph_ub, double n_t, double n_g, double n_odd,
                                    const SecurityParams& sec) {
    (void)n10_lb;
    (void)n01_lb;
    AoppFiniteKeyResult res;
    auto fail = [&res](const char* why) {
        res.insufficient = true;
        res.reason = why;
        res.n1_prime = 0.0;
        res.e1ph_prime = 0.5;
        return res;
    };

    res.diag.n_g = n_g;
    res.diag.n_odd = n_odd;
    if (!(n_odd > 0.0)) return fail("insufficient statistics: n_odd is zero");
    if (!(n_t > 0.0)) return fail("insufficient statistics: empty raw key");
    if (!(n1_lb > 0.0)) return fail("insufficient statistics: no untagged bits");

    const double eps = sec.eps_chernoff;
    const double u = n_g / (2.0 * n_odd);
    res.diag.u = u;

    const double ratio = n1_lb / n_t;
    const double mean_pairs = ratio * ratio * u * n_t / 2.0;
    const double n = chernoff_lower(mean_pairs, eps);
    res.diag.n = n;
    if (!(n > 0.0)) return fail("insufficient statistics: untagged pair bound is zero");

    const double k = u * n1_lb - 2.0 * n;
    res.diag.k = k;
    if (!(k > 0.0)) return fail("insufficient statistics: k <= 0");

    const double r = (2.0 * n + k) / k * std::log(3.0 * k * k / sec.eps_rk);
    res.diag.r = r;
    if (!(2.0 * n > r)) return fail("insufficient statistics: 2n <= r");

    const double m_bar = chernoff_upper(2.0 * n * e1ph_ub, eps);
    res.diag.m_bar = m_bar;
    const double e_tau = m_bar / (2.0 * n - r);
    res.diag.e_tau = e_tau;

    double e1_prime;
    if (e_tau >= 0.5) {
        // pair-combination estimate saturates; report the pessimal rate
        e1_prime = 0.5;
        res.diag.m_bar_s = 0.5 * n;
    } else {
        const double pair_err_mean = (n - r) * 2.0 * e_tau * (1.0 - e_tau);
        const double m_bar_s = chernoff_upper(std::max(0.0, pair_err_mean), eps) + r;
        res.diag.m_bar_s = m_bar_s;
        e1_prime = std::min(0.5, m_bar_s / n);
    }

    res.n1_prime = n;
    res.e1ph_prime = e1_prime;
    return res;
}

PairingStats estimate_pairing_stats(const CountLedger& led, const ProtocolParams& params) {
    PairingStats st;
    const double n_t = led.detected_valid_z;
    if (!(n_t > 0.0)) {
        st.reason = "no Z-window detections";
        return st;
    }

    double b1 = 0.0, b0 = 0.0;
    if (led.has_z_split) {
        b1 = led.zz_correct_a_send + led.zz_error_none_send;
        b0 = led.zz_correct_b_send + led.zz_error_both_send;
        st.estimated = false;
    } else {
        const double sent_zo = led.sent_cell(Basis::Z, Basis::X, Intensity::mu_z, Intensity::vacuum);
        const double sent_oz = led.sent_cell(Basis::X, Basis::Z, Intensity::vacuum, Intensity::mu_z);
        if (!(sent_zo > 0.0) || !(sent_oz > 0.0) || !(led.sent_zz > 0.0)) {
            st.reason = "single-side signal rows (ZX30/XZ03) or ZZ totals missing";
            return st;
        }
        const double s_zo =
            led.detected_cell(Basis::Z, Basis::X, Intensity::mu_z, Intensity::vacuum) / sent_zo;
        const double s_oz =
            led.detected_cell(Basis::X, Basis::Z, Intensity::vacuum, Intensity::mu_z) / sent_oz;
        const double eps_send = params.eps_send;
        // Bob-0 events are B-only-send clicks plus both-send clicks; the
        // both-send rate is modelled as the sum of the single-side rates,
        // which overestimates it and keeps the pairing credit conservative.
        b0 = led.sent_zz * (eps_send * (1.0 - eps_send) * s_oz +
                            eps_send * eps_send * (s_zo + s_oz));
        b1 = n_t - b0;
        st.estimated = true;
    }
    if (!(b0 > 0.0) || !(b1 > 0.0)) {
        st.reason = "degenerate Z bit populations";
        return st;
    }
    const double total = b0 + b1;
    st.q = b1 / total;
    st.n_g = std::min(b0, b1);
    st.n_odd = total * st.q * (1.0 - st.q);
    st.ok = true;
    return st;
}

SurvivorEstimate estimate_survivors(const CountLedger& led, const ProtocolParams& params,
                                    const ChannelModel* channel_hint) {
    SurvivorEstimate est;
    const double n_t = led.detected_valid_z;
    if (!(n_t > 0.0)) return est;

    double c_a = 0.0, c_b = 0.0, e_none = 0.0, e_both = 0.0;
    if (led.has_z_split) {
        c_a = led.zz_correct_a_send;
        c_b = led.zz_correct_b_send;
        e_none = led.zz_error_none_send;
        e_both = led.zz_error_both_send;
    } else {
        const double sent_zo = led.sent_cell(Basis::Z, Basis::X, Intensity::mu_z, Intensity::vacuum);
        const double sent_oz = led.sent_cell(Basis::X, Basis::Z, Intensity::vacuum, Intensity::mu_z);
        if (!(sent_zo > 0.0) || !(sent_oz > 0.0) || !(led.sent_zz > 0.0)) return est;
        const double s_zo =
            led.detected_cell(Basis::Z, Basis::X, Intensity::mu_z, Intensity::vacuum) / sent_zo;
        const double s_oz =
            led.detected_cell(Basis::X, Basis::Z, Intensity::vacuum, Intensity::mu_z) / sent_oz;

        // vacuum-vacuum click rate: pooled vacuum rows, dark-rate fallback
        double s_vac = 0.0;
        double vac_sent = 0.0, vac_det = 0.0;
        const struct {
            Basis a, b;
        } rows[3] = {{Basis::Z, Basis::X}, {Basis::X, Basis::Z}, {Basis::X, Basis::X}};
        for (const auto& rw : rows) {
            vac_sent += led.sent_cell(rw.a, rw.b, Intensity::vacuum, Intensity::vacuum);
            vac_det += led.detected_cell(rw.a, rw.b, Intensity::vacuum, Intensity::vacuum);
        }
        if (vac_sent > 0.0) s_vac = vac_det / vac_sent;
        else if (channel_hint) s_vac = 2.0 * channel_hint->dark_rate;

        const double eps_send = params.eps_send;
        const double w = led.sent_zz * eps_send * (1.0 - eps_send);
        c_a = w * s_zo;
        c_b = w * s_oz;
        e_none = led.sent_zz * (1.0 - eps_send) * (1.0 - eps_send) * s_vac;
        // rescale model corrects onto the observed tallies, attribute the
        // remaining observed errors to both-send windows
        if (c_a + c_b > 0.0 && led.zz_correct > 0.0) {
            const double scale = led.zz_correct / (c_a + c_b);
            c_a *= scale;
            c_b *= scale;
        }
        e_none = std::min(e_none, led.zz_error);
        e_both = led.zz_error - e_none;
    }

    const double b1 = c_a + e_none;
    const double b0 = c_b + e_both;
    if (!(b1 > 0.0) || !(b0 > 0.0)) return est;
    const double e1 = e_none / b1;
    const double e0 = e_both / b0;
    const double p_survive = (1.0 - e1) * (1.0 - e0) + e1 * e0;
    if (!(p_survive > 0.0)) return est;
    est.n_t_prime = std::min(b0, b1) * p_survive;
    est.error_rate = e1 * e0 / p_survive;
    est.ok = true;
    return est;
}

}  // namespace snsqkd
