#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "snsqkd/aopp.hpp"
#include "snsqkd/decoy.hpp"
#include "snsqkd/ledger.hpp"
#include "snsqkd/ledger_io.hpp"
#include "snsqkd/params.hpp"

namespace snsqkd {

/// Final secure key rate per pulse pair,
///   R = (1/N) { n1'[1 - h(e1ph')] - f nt' h(Ez')
///               - 2 log2(2/eps_cor) - 2 log2(1/(sqrt(2) eps_pa eps_hat)) },
/// clamped at 0 from below.
double key_rate(double n1_prime, double e1ph_prime, double nt_prime, double ez_prime,
                double n_total, const SecurityParams& sec);

enum class PlobMode { absolute, relative };

/// Repeaterless secret-key capacity -log2(1 - eta). absolute uses the pure
/// channel transmittance; relative folds detector efficiency into eta.
/// Returns +infinity at eta == 1.
double plob_bound(double eta, PlobMode mode, double detector_eta = 1.0);

/// Everything the analysis chain produces for one ledger.
struct KeyRateReport {
    double s01_lb = 0.0, s10_lb = 0.0, s1_lb = 0.0;
    double n10_lb = 0.0, n01_lb = 0.0, n1_lb = 0.0;
    double e1ph_ub = 0.0;
    double n1_prime = 0.0, e1ph_prime = 0.0;
    double nt_prime = 0.0, ez_prime = 0.0;
    double qber_z_before = 0.0;
    double qber_x11 = 0.0;
    double rate = 0.0;
    double plob_abs = 0.0, plob_rel = 0.0;
    bool insufficient = false;
    AoppDiagnostics diag;
    std::vector<std::string> warnings;
};

struct AnalysisOptions {
    bool rates_are_expected = false; ///< ledger cells are expectations, not draws
    std::optional<double> nt_prime;  ///< measured survived bits, when known
    std::optional<double> ez_prime;  ///< measured post-AOPP error rate
    std::optional<double> n_g;       ///< measured pairing count, when known
    std::optional<double> n_odd;     ///< measured odd-parity grouping count
    std::optional<double> loss_db;   ///< end-to-end loss for the PLOB references
    double detector_eta = 1.0;       ///< folded into the relative PLOB bound
};

/// Full decoy -> AOPP finite-key -> key-rate chain on a ledger. Missing
/// post-AOPP observables are estimated from the ledger and flagged in the
/// warnings. Insufficient statistics yield rate 0 with the stage recorded.
KeyRateReport analyze_ledger(const CountLedger& ledger, const ProtocolParams& params,
                             const SecurityParams& sec, const AnalysisOptions& options = {});

/// Replays the analysis chain with the phase post-selection window taken
/// from one row of the fixture's window-sweep table. When the row matches
/// the ledger's own window, the exact per-channel tallies are used;
/// otherwise the in-window tallies are synthesized from the row's detection
/// count and QBER.
KeyRateReport analyze_window_row(const LedgerDocument& doc, const ProtocolParams& params,
                                 const SecurityParams& sec,
                                 const LedgerDocument::WindowRow& row,
                                 const AnalysisOptions& base_options = {});

struct RateCurvePoint {
    double total_loss_db = 0.0;
    double rate_per_pulse = 0.0;
    double plob_abs = 0.0;
    double plob_rel = 0.0;
    ProtocolParams params_used;
    KeyRateReport report;
    bool ok = false;
    std::string error;
};

enum class CurveMode { expected, monte_carlo };

/// Rate-versus-loss curve. Each grid point rescales both arms of the channel
/// template so the end-to-end loss matches, obtains a ledger (analytic
/// expectation or simulation), and runs the full chain. Template arm
/// transmittances are interpreted at reference loss ref_loss_db.
std::vector<RateCurvePoint> simulate_rate_curve(const ProtocolParams& params_template,
                                                const ChannelModel& channel_template,
                                                double ref_loss_db,
                                                const std::vector<double>& loss_grid_db,
                                                const SecurityParams& sec, CurveMode mode,
                                                std::uint64_t seed = 1,
                                                std::uint64_t mc_pairs = 0,
                                                double detector_eta = 1.0);

/// Derivative-free coordinate descent with shrinking steps over a generic
/// objective; exposed so the optimizer logic is testable on toy objectives.
/// Returns the best parameter vector found (never worse than init).
std::vector<double> coordinate_descent(
    const std::function<double(const std::vector<double>&)>& objective,
    std::vector<double> init, std::vector<double> initial_steps, int max_passes = 60,
    double min_step_scale = 1e-4);

/// Maximizes the expected-mode key rate over
/// {mu1, mu2, mu_z, p1, p2, pz, eps_send, ds_half_deg}, respecting all
/// protocol invariants. Returns the best-found parameters (init when no
/// improvement exists).
ProtocolParams optimize_params(const ChannelModel& channel, double n_total,
                               const SecurityParams& sec, const ProtocolParams& init);

}  // namespace snsqkd
