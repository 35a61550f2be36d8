#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace snsqkd {

enum class Basis : std::uint8_t { Z = 0, X = 1 };

/// Source intensity code, matching the published table digits:
/// 0 = vacuum, 1 = mu1, 2 = mu2, 3 = mu_z.
enum class Intensity : std::uint8_t { vacuum = 0, mu1 = 1, mu2 = 2, mu_z = 3 };

/// Flat cell index for a (basisA, basisB, intensityA, intensityB) pair.
inline int cell_index(Basis a, Basis b, Intensity ia, Intensity ib) {
    return (static_cast<int>(a) * 2 + static_cast<int>(b)) * 16 +
           static_cast<int>(ia) * 4 + static_cast<int>(ib);
}

/// Sent / detected tallies of a protocol run. Values are double so the same
/// structure carries integer Monte Carlo counts and real-valued expectations.
///
/// The ZZ block is special: Z-basis send decisions are key bits, so replayed
/// ledgers carry only the aggregates (sent_zz, detected_valid_z,
/// zz_error/zz_correct). Simulated and expected ledgers additionally fill the
/// ground-truth split (has_z_split) used by the AOPP statistics.
struct CountLedger {
    std::array<double, 64> sent{};
    std::array<double, 64> detected{};

    double sent_zz = 0.0;          ///< all pulse pairs where both chose Z
    double detected_valid_z = 0.0; ///< one-detector heralded events in ZZ windows
    double zz_error = 0.0;
    double zz_correct = 0.0;

    bool has_z_split = false;
    double zz_correct_a_send = 0.0; ///< Alice sent, Bob did not (agreeing bits)
    double zz_correct_b_send = 0.0; ///< Bob sent, Alice did not
    double zz_error_both_send = 0.0;
    double zz_error_none_send = 0.0;

    /// Phase post-selected X tallies per detector channel, at window
    /// ds_half_deg. x11 refers to mu1-mu1 pairs, x22 to mu2-mu2 pairs.
    double ds_half_deg = 0.0;
    std::array<double, 2> x11_in_window{};
    std::array<double, 2> x11_correct_in_window{};
    std::array<double, 2> x22_in_window{};
    std::array<double, 2> x22_correct_in_window{};

    bool has_sent_in_window = false; ///< true when the sender-side window tallies exist
    double sent_x11_in_window = 0.0;
    double sent_x22_in_window = 0.0;

    std::array<double, 2> detected_valid{}; ///< all one-detector events per channel
    double n_total = 0.0;                   ///< pulse pairs represented by this ledger

    double& sent_cell(Basis a, Basis b, Intensity ia, Intensity ib) {
        return sent[cell_index(a, b, ia, ib)];
    }
    double& detected_cell(Basis a, Basis b, Intensity ia, Intensity ib) {
        return detected[cell_index(a, b, ia, ib)];
    }
    double sent_cell(Basis a, Basis b, Intensity ia, Intensity ib) const {
        return sent[cell_index(a, b, ia, ib)];
    }
    double detected_cell(Basis a, Basis b, Intensity ia, Intensity ib) const {
        return detected[cell_index(a, b, ia, ib)];
    }

    /// Associative, commutative merge used by block-parallel simulation.
    CountLedger& operator+=(const CountLedger& other);

    /// Returns one message per violated ledger invariant (detected <= sent,
    /// consistent Z totals, window tallies bounded). Empty when consistent.
    std::vector<std::string> check_invariants() const;
};

/// Human-readable cell label in the published naming convention, e.g. "ZX30".
std::string cell_name(Basis a, Basis b, Intensity ia, Intensity ib);

}  // namespace snsqkd
