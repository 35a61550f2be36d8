#pragma once

#include <string>
#include <vector>

#include "snsqkd/ledger.hpp"
#include "snsqkd/params.hpp"

namespace snsqkd {

/// Observed counting rates of the decoy sources. kappa indexes Alice's source
/// (o, x, y, z == vacuum, mu1, mu2, mu_z) and zeta Bob's. Each rate carries
/// the event count and the pulse-pair count backing it so Chernoff
/// conversions can be applied at the count level.
struct CountingRates {
    struct Rate {
        double events = 0.0;
        double pairs = 0.0;
        bool defined = false;
        double value() const { return defined ? events / pairs : 0.0; }
    };

    Rate s[4][4]; ///< S[kappa][zeta]

    /// Error counting rate of the phase post-selected X windows.
    double t_x_errors = 0.0;       ///< m_X
    double t_x_pairs = 0.0;        ///< N_X
    bool t_x_defined = false;
    double t_x() const { return t_x_defined ? t_x_errors / t_x_pairs : 0.0; }
};

/// Builds counting rates from a ledger using the source pooling of the field
/// experiment: mismatched-basis windows with one vacuum side pool into the
/// single-light rates (ZX01+XX01 -> S_ox' etc.); the vacuum-vacuum rate
/// S_oo' uses the matched X-basis row (XX00) only. T_X comes from the
/// phase post-selected mu1-mu1 tallies; when the sender-side window count is
/// absent it is reconstructed as sent * 4*ds/360 (uniform-phase fraction).
CountingRates counting_rates(const CountLedger& ledger);

/// Lower bounds on single-photon yields and untagged-bit counts and the
/// phase-flip error upper bound.
struct DecoyBounds {
    double s01_lb = 0.0;
    double s10_lb = 0.0;
    double s1_lb = 0.0;
    double n10_lb = 0.0;
    double n01_lb = 0.0;
    double n1_lb = 0.0;   ///< observed-count lower bound phi^L(<n10>+<n01>)
    double e1ph_ub = 0.0;
    bool clamped = false; ///< a pre-clamp bound went negative
    std::vector<std::string> warnings;
};

/// Decoy yield lower bounds (s01, s10, s1 = mean). When observed_input is
/// true the rates are first converted to worst-case expected values with
/// Chernoff inversions at sec.eps_chernoff (single-light rates down,
/// strong-decoy and vacuum-vacuum rates up); when false the rates are taken
/// as expected values directly (mean-field pipeline).
DecoyBounds yield_lower_bounds(const CountingRates& rates, const ProtocolParams& params,
                               const SecurityParams& sec, bool observed_input);

/// Scales the yield bounds by the Z-window single-photon emission weights:
/// <n10> = N pz^2 eps (1-eps) mu_z e^{-mu_z} <s10>, likewise <n01>; also
/// fills the observed-count bounds n10_lb, n01_lb, n1_lb via phi^L.
void untagged_bit_bounds(DecoyBounds& bounds, const ProtocolParams& params,
                         const SecurityParams& sec);

/// Phase-flip error upper bound of the untagged bits,
/// <e1ph> = (<T_X> - e^{-2 mu1} <S_oo'>/2) / (2 e^{-2 mu1} mu1 <s1>),
/// clamped to [0, 0.5]. Worst-case directions when observed_input: T_X up,
/// S_oo' down, s1 already a lower bound. Throws std::domain_error when the
/// s1 bound is zero.
double phase_error_upper(const CountingRates& rates, const DecoyBounds& bounds,
                         const ProtocolParams& params, const SecurityParams& sec,
                         bool observed_input);

}  // namespace snsqkd
