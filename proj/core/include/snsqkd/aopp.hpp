#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snsqkd/ledger.hpp"
#include "snsqkd/params.hpp"
#include "snsqkd/raw_key.hpp"

namespace snsqkd {

/// Result of actively-odd-parity pairing on a raw key pair.
struct AoppOutcome {
    std::vector<std::uint8_t> alice_out; ///< surviving bits, one per kept pair
    std::vector<std::uint8_t> bob_out;
    std::uint64_t n_g = 0;    ///< pairs formed (min of Bob's 0/1 populations)
    std::uint64_t n_odd = 0;  ///< odd pairs under random two-by-two grouping of Bob's string
    std::uint64_t n_errors = 0;
    double survived_error_rate = 0.0;
    /// The realized matching, (index of Bob's 1-bit, index of Bob's 0-bit)
    /// per formed pair; lets tests recompute the survival set independently.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;

    std::uint64_t n_t_prime() const { return alice_out.size(); }
};

/// Bit-level AOPP: Bob pairs each of his 1-bits with a distinct 0-bit
/// uniformly at random; Alice keeps the pairs whose parity on her side is
/// odd; each surviving pair contributes its first element's bit. Also counts
/// n_odd for a random two-by-two grouping of Bob's full string. Deterministic
/// under the seed. Throws std::invalid_argument when Bob's string has no 0s
/// or no 1s.
AoppOutcome aopp_pair(const RawKeyPair& raw, std::uint64_t seed);

/// Diagnostic scalars of the finite-key pairing analysis.
struct AoppDiagnostics {
    double u = 0.0;
    double n = 0.0;
    double k = 0.0;
    double r = 0.0;
    double m_bar = 0.0;
    double e_tau = 0.0;
    double m_bar_s = 0.0;
    double n_g = 0.0;
    double n_odd = 0.0;
    bool n_odd_estimated = false; ///< pairing observables estimated, not measured
    double q_bob_ones = 0.0;      ///< Bob 1-fraction behind the estimate
};

struct AoppFiniteKeyResult {
    double n1_prime = 0.0;
    double e1ph_prime = 0.0;
    bool insufficient = false; ///< a precondition failed; the rate must be 0
    std::string reason;
    AoppDiagnostics diag;
};

/// Finite-key untagged-bit count and phase-error rate after AOPP:
///   u = n_g / (2 n_odd)
///   n = phi^L((n1/n_t)^2 u n_t / 2)
///   k = u n1 - 2n
///   r = ((2n+k)/k) ln(3 k^2 / eps_rk)
///   M = phi^U(2 n e1ph_ub)
///   e_tau = M / (2n - r)
///   M_s = phi^U((n - r) 2 e_tau (1 - e_tau)) + r
///   n1' = n, e1ph' = M_s / n  (clamped to [0, 1/2])
/// All phi applications at sec.eps_chernoff. Signals insufficient statistics
/// instead of throwing when n_odd == 0, k <= 0 or 2n <= r.
AoppFiniteKeyResult aopp_finite_key(double n1_lb, double n10_lb, double n01_lb,
                                    double e1ph_ub, double n_t, double n_g, double n_odd,
                                    const SecurityParams& sec);

/// Pairing observables (n_g, n_odd) for a ledger. Uses the ground-truth Z
/// split when the ledger carries one; otherwise estimates Bob's bit
/// populations from the sending probability and the single-side signal rates
/// (ZX30 / XZ03 rows), modelling the both-send click rate conservatively as
/// their sum, anchored to the observed number of Z detections.
struct PairingStats {
    double n_g = 0.0;
    double n_odd = 0.0;
    double q = 0.0; ///< Bob 1-fraction
    bool estimated = false;
    bool ok = false;
    std::string reason;
};
PairingStats estimate_pairing_stats(const CountLedger& ledger, const ProtocolParams& params);

/// Best-estimate survived-bit count and post-AOPP error rate from ledger
/// tallies alone (replay without bit strings). Not security-critical; used
/// when a ledger lacks the measured post-AOPP fields.
struct SurvivorEstimate {
    double n_t_prime = 0.0;
    double error_rate = 0.0;
    bool ok = false;
};
SurvivorEstimate estimate_survivors(const CountLedger& ledger, const ProtocolParams& params,
                                    const ChannelModel* channel_hint = nullptr);

}  // namespace snsqkd
