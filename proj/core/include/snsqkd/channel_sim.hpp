#pragma once

#include <cstdint>
#include <utility>

#include "snsqkd/ledger.hpp"
#include "snsqkd/params.hpp"
#include "snsqkd/raw_key.hpp"

namespace snsqkd {

/// One side's choice for a single time window.
struct PulseChoice {
    Basis basis = Basis::Z;
    Intensity intensity = Intensity::vacuum;
    int phase_slice = 0; ///< in [0, n_phase_slices); meaningful for X light only
    int z_bit = 0;       ///< key-bit meaning for Z windows
};

/// Channel phase state of one simulation block. phase_offset is the current
/// relative phase psi_AB (reduced mod 2*pi); rng_stream identifies the
/// deterministic substream that drives this block.
struct DriftState {
    double phase_offset = 0.0;
    std::uint64_t rng_stream = 0;
};

/// Outcome of one measured pulse pair at the middle node.
struct DetectionRecord {
    enum class Which : std::uint8_t { none = 0, d1 = 1, d2 = 2, both = 3 };
    Which which_detector = Which::none;
    double estimated_psi = 0.0; ///< phase estimate in force for this window

    bool one_detector() const { return which_detector == Which::d1 || which_detector == Which::d2; }
};

/// Exactly-one-click probabilities of the two detectors for a coherent pulse
/// pair with source intensities mu_a, mu_b and total phase difference delta
/// (slice difference minus psi_AB). Arm transmittances, dark counts and the
/// misalignment port mixing come from the channel.
///
/// Output-port mean photon numbers:
///   I_pm = (eta_a mu_a + eta_b mu_b +- 2 sqrt(eta_a mu_a eta_b mu_b) cos delta) / 2
/// Per-detector click probability: 1 - (1-dark) exp(-I).
std::pair<double, double> click_probabilities(double mu_a, double mu_b, double delta,
                                              const ChannelModel& channel);

/// PulseChoice-level wrapper resolving intensity codes to mean photon numbers.
std::pair<double, double> click_probabilities(const PulseChoice& choice_a,
                                              const PulseChoice& choice_b, double psi,
                                              const ProtocolParams& params,
                                              const ChannelModel& channel);

struct SimOptions {
    bool capture_raw_keys = false;
    int n_threads = 1;
    /// Windows per independent block; rounded up to a whole number of
    /// phase-estimation blocks. Each block starts from a fresh uniform
    /// channel phase and its own substream, which is what makes the result
    /// independent of the thread count.
    std::uint64_t windows_per_block = 1u << 20;
};

struct SimResult {
    CountLedger ledger;
    RawKeyPair raw_keys;
    bool has_raw_keys = false;
};

/// Monte Carlo simulation of n_pairs pulse pairs. Deterministic for fixed
/// (params, channel, n_pairs, seed) regardless of options.n_threads.
SimResult simulate(const ProtocolParams& params, const ChannelModel& channel,
                   std::uint64_t n_pairs, std::uint64_t seed, const SimOptions& options = {});

/// Analytic mean-field companion of simulate(): real-valued expected counts
/// for n_pairs pulse pairs (params.n_total when n_pairs == 0), including the
/// phase post-selected X tallies and the ground-truth Z split. No randomness.
CountLedger expected_ledger(const ProtocolParams& params, const ChannelModel& channel,
                            double n_pairs = 0.0);

}  // namespace snsqkd
