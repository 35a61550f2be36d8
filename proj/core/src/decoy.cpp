#include "snsqkd/decoy.hpp"

#include <cmath>
#include <stdexcept>

#include "snsqkd/chernoff.hpp"

namespace snsqkd {

namespace {

constexpr int kO = 0, kX = 1, kY = 2, kZ = 3;

void pool(CountingRates::Rate& r, const CountLedger& led, Basis a, Basis b, Intensity ia,
          Intensity ib) {
    const double s = led.sent_cell(a, b, ia, ib);
    if (s <= 0.0) return;
    r.pairs += s;
    r.events += led.detected_cell(a, b, ia, ib);
    r.defined = true;
}

}  // namespace

CountingRates counting_rates(const CountLedger& led) {
    CountingRates r;

    // vacuum-vacuum: matched X windows
    pool(r.s[kO][kO], led, Basis::X, Basis::X, Intensity::vacuum, Intensity::vacuum);
    // single-light decoy rates: matched X plus mismatched-basis vacuum pairs
    pool(r.s[kO][kX], led, Basis::X, Basis::X, Intensity::vacuum, Intensity::mu1);
    pool(r.s[kO][kX], led, Basis::Z, Basis::X, Intensity::vacuum, Intensity::mu1);
    pool(r.s[kO][kY], led, Basis::X, Basis::X, Intensity::vacuum, Intensity::mu2);
    pool(r.s[kO][kY], led, Basis::Z, Basis::X, Intensity::vacuum, Intensity::mu2);
    pool(r.s[kX][kO], led, Basis::X, Basis::X, Intensity::mu1, Intensity::vacuum);
    pool(r.s[kX][kO], led, Basis::X, Basis::Z, Intensity::mu1, Intensity::vacuum);
    pool(r.s[kY][kO], led, Basis::X, Basis::X, Intensity::mu2, Intensity::vacuum);
    pool(r.s[kY][kO], led, Basis::X, Basis::Z, Intensity::mu2, Intensity::vacuum);
    // matched bright pairs and the single-side signal rates (diagnostics,
    // pairing estimator)
    pool(r.s[kX][kX], led, Basis::X, Basis::X, Intensity::mu1, Intensity::mu1);
    pool(r.s[kY][kY], led, Basis::X, Basis::X, Intensity::mu2, Intensity::mu2);
    pool(r.s[kZ][kO], led, Basis::Z, Basis::X, Intensity::mu_z, Intensity::vacuum);
    pool(r.s[kO][kZ], led, Basis::X, Basis::Z, Intensity::vacuum, Intensity::mu_z);

    // error counting rate of the post-selected X windows
    const double in_window = led.x11_in_window[0] + led.x11_in_window[1];
    const double correct = led.x11_correct_in_window[0] + led.x11_correct_in_window[1];
    const double sent_x11 =
        led.sent_cell(Basis::X, Basis::X, Intensity::mu1, Intensity::mu1);
    double n_x = 0.0;
    if (led.has_sent_in_window) {
        n_x = led.sent_x11_in_window;
    } else if (sent_x11 > 0.0 && led.ds_half_deg > 0.0) {
        n_x = sent_x11 * 4.0 * led.ds_half_deg / 360.0;
    }
    if (n_x > 0.0) {
        r.t_x_errors = in_window - correct;
        r.t_x_pairs = n_x;
        r.t_x_defined = true;
    }
    return r;
}

namespace {

double worst_case_rate(const CountingRates::Rate& r, double eps, bool observed, bool up) {
    if (!r.defined) throw std::domain_error("decoy: counting rate with zero sent count");
    if (!observed) return r.value();
    const double e = up ? mean_upper_bound(r.events, eps) : mean_lower_bound(r.events, eps);
    return e / r.pairs;
}

}  // namespace

DecoyBounds yield_lower_bounds(const CountingRates& rates, const ProtocolParams& params,
                               const SecurityParams& sec, bool observed_input) {
    DecoyBounds b;
    const double mu1 = params.mu1;
    const double mu2 = params.mu2;
    const double denom = mu2 * mu1 * (mu2 - mu1);
    if (!(denom > 0.0)) throw std::domain_error("decoy: requires 0 < mu1 < mu2");

    const double eps = sec.eps_chernoff;
    const double s_ox = worst_case_rate(rates.s[kO][kX], eps, observed_input, false);
    const double s_oy = worst_case_rate(rates.s[kO][kY], eps, observed_input, true);
    const double s_xo = worst_case_rate(rates.s[kX][kO], eps, observed_input, false);
    const double s_yo = worst_case_rate(rates.s[kY][kO], eps, observed_input, true);
    const double s_oo = worst_case_rate(rates.s[kO][kO], eps, observed_input, true);

    const double c_weak = mu2 * mu2 * std::exp(mu1);
    const double c_strong = mu1 * mu1 * std::exp(mu2);
    const double c_vac = mu2 * mu2 - mu1 * mu1;

    double s01 = (c_weak * s_ox - c_strong * s_oy - c_vac * s_oo) / denom;
    double s10 = (c_weak * s_xo - c_strong * s_yo - c_vac * s_oo) / denom;
    if (s01 < 0.0) {
        b.clamped = true;
        b.warnings.push_back("s01 lower bound negative before clamping (decoy inequality violated)");
        s01 = 0.0;
    }
    if (s10 < 0.0) {
        b.clamped = true;
        b.warnings.push_back("s10 lower bound negative before clamping (decoy inequality violated)");
        s10 = 0.0;
    }
    b.s01_lb = std::min(1.0, s01);
    b.s10_lb = std::min(1.0, s10);
    b.s1_lb = 0.5 * (b.s01_lb + b.s10_lb);
    return b;
}

void untagged_bit_bounds(DecoyBounds& b, const ProtocolParams& params,
                         const SecurityParams& sec) {
    const double weight = params.n_total * params.pz * params.pz * params.eps_send *
                          (1.0 - params.eps_send) * params.mu_z * std::exp(-params.mu_z);
    const double mean10 = weight * b.s10_lb;
    const double mean01 = weight * b.s01_lb;
    b.n10_lb = chernoff_lower(mean10, sec.eps_chernoff);
    b.n01_lb = chernoff_lower(mean01, sec.eps_chernoff);
    b.n1_lb = chernoff_lower(mean10 + mean01, sec.eps_chernoff);
}

double phase_error_upper(const CountingRates& rates, const DecoyBounds& bounds,
                         const ProtocolParams& params, const SecurityParams& sec,
                         bool observed_input) {
    if (!(bounds.s1_lb > 0.0)) {
        throw std::domain_error("phase_error_upper: s1 lower bound is zero, bound undefined");
    }
    if (!rates.t_x_defined) {
        throw std::domain_error("phase_error_upper: no post-selected X-window statistics");
    }
    const double eps = sec.eps_chernoff;
    const double t_x = observed_input
                           ? mean_upper_bound(rates.t_x_errors, eps) / rates.t_x_pairs
                           : rates.t_x();
    const double s_oo = worst_case_rate(rates.s[kO][kO], eps, observed_input, false);

    const double att = std::exp(-2.0 * params.mu1);
    const double numerator = t_x - 0.5 * att * s_oo;
    const double denominator = 2.0 * att * params.mu1 * bounds.s1_lb;
    double e1 = numerator / denominator;
    if (e1 < 0.0) e1 = 0.0;
    if (e1 > 0.5) e1 = 0.5;
    return e1;
}

}  // namespace snsqkd
