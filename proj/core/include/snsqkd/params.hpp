#pragma once

#include <string>
#include <vector>

namespace snsqkd {

/// Everything Alice and Bob choose: source intensities, basis and intensity
/// probabilities, phase discretization and the phase post-selection window.
/// All fields dimensionless except ds_half_deg (degrees) and n_total (pulse
/// pairs). Immutable by convention after construction; safe to share.
struct ProtocolParams {
    double mu1 = 0.0;        ///< weak decoy mean photon number
    double mu2 = 0.0;        ///< strong decoy mean photon number
    double mu_z = 0.0;       ///< signal-state mean photon number
    double p1 = 0.0;         ///< X-basis probability of sending mu1
    double p2 = 0.0;         ///< X-basis probability of sending mu2
    double pz = 0.0;         ///< probability of choosing the Z basis
    double eps_send = 0.0;   ///< Z-basis sending probability
    int n_phase_slices = 16; ///< discrete random phases per X pulse
    double ds_half_deg = 10.0; ///< accepted half-width of the phase window
    double n_total = 0.0;    ///< total pulse-pair count N

    double p0() const { return 1.0 - p1 - p2; } ///< X-basis vacuum probability
};

/// Channel and detection model. Transmittances are linear and include fiber,
/// optics and detector efficiency for the respective arm; use
/// db_to_linear/linear_to_db at configuration boundaries.
struct ChannelModel {
    double eta_a = 0.0;            ///< Alice arm transmittance, source to click
    double eta_b = 0.0;            ///< Bob arm transmittance
    double dark_rate = 0.0;        ///< dark/noise probability per detector per gate
    double phase_drift_sigma = 0.0;///< phase drift rate std, rad/us
    double ref_block_us = 10.0;    ///< phase-estimation accumulation window, us
    double misalignment = 0.0;     ///< residual interference error probability
};

/// Failure probabilities and error-correction efficiency of the finite-key
/// analysis.
struct SecurityParams {
    double f = 1.1;             ///< error-correction efficiency
    double eps_cor = 1e-10;     ///< error-correction failure probability
    double eps_pa = 1e-10;      ///< privacy-amplification failure probability
    double eps_hat = 1e-10;     ///< entropy chain-rule coefficient
    double eps_rk = 1e-9;       ///< trace-distance parameter of the pairing bound
    double eps_chernoff = 1e-10;///< per-invocation Chernoff failure probability
};

/// Checks every documented invariant and returns one message per violation.
/// An empty result means the configuration is valid.
std::vector<std::string> validate(const ProtocolParams& params,
                                  const ChannelModel& channel,
                                  const SecurityParams& sec);

/// Convenience: validate and throw std::invalid_argument aggregating all
/// violations when there are any.
void validate_or_throw(const ProtocolParams& params,
                       const ChannelModel& channel,
                       const SecurityParams& sec);

}  // namespace snsqkd
