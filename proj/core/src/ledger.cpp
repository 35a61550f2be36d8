#include "snsqkd/ledger.hpp"

#include <cmath>
#include <sstream>

namespace snsqkd {

CountLedger& CountLedger::operator+=(const CountLedger& other) {
    for (int i = 0; i < 64; ++i) {
        sent[i] += other.sent[i];
        detected[i] += other.detected[i];
    }
    sent_zz += other.sent_zz;
    detected_valid_z += other.detected_valid_z;
    zz_error += other.zz_error;
    zz_correct += other.zz_correct;

    has_z_split = has_z_split || other.has_z_split;
    zz_correct_a_send += other.zz_correct_a_send;
    zz_correct_b_send += other.zz_correct_b_send;
    zz_error_both_send += other.zz_error_both_send;
    zz_error_none_send += other.zz_error_none_send;

    if (ds_half_deg == 0.0) ds_half_deg = other.ds_half_deg;
    for (int c = 0; c < 2; ++c) {
        x11_in_window[c] += other.x11_in_window[c];
        x11_correct_in_window[c] += other.x11_correct_in_window[c];
        x22_in_window[c] += other.x22_in_window[c];
        x22_correct_in_window[c] += other.x22_correct_in_window[c];
        detected_valid[c] += other.detected_valid[c];
    }
    has_sent_in_window = has_sent_in_window || other.has_sent_in_window;
    sent_x11_in_window += other.sent_x11_in_window;
    sent_x22_in_window += other.sent_x22_in_window;
    n_total += other.n_total;
    return *this;
}

std::string cell_name(Basis a, Basis b, Intensity ia, Intensity ib) {
    std::string s;
    s += (a == Basis::Z) ? 'Z' : 'X';
    s += (b == Basis::Z) ? 'Z' : 'X';
    s += static_cast<char>('0' + static_cast<int>(ia));
    s += static_cast<char>('0' + static_cast<int>(ib));
    return s;
}

std::vector<std::string> CountLedger::check_invariants() const {
    std::vector<std::string> bad;
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            for (int ia = 0; ia < 4; ++ia) {
                for (int ib = 0; ib < 4; ++ib) {
                    const auto ba = static_cast<Basis>(a);
                    const auto bb = static_cast<Basis>(b);
                    const auto xa = static_cast<Intensity>(ia);
                    const auto xb = static_cast<Intensity>(ib);
                    const double s = sent_cell(ba, bb, xa, xb);
                    const double d = detected_cell(ba, bb, xa, xb);
                    if (s < 0.0 || d < 0.0) {
                        bad.push_back("negative count in cell " + cell_name(ba, bb, xa, xb));
                    }
                    if (d > s) {
                        bad.push_back("detected > sent in cell " + cell_name(ba, bb, xa, xb));
                    }
                }
            }
        }
    }
    if (detected_valid_z > sent_zz) bad.push_back("detected > sent in cell ZZ");
    if (detected_valid_z > 0.0 || zz_error > 0.0 || zz_correct > 0.0) {
        const double total = zz_error + zz_correct;
        if (std::abs(total - detected_valid_z) > 1e-6 * std::max(1.0, detected_valid_z)) {
            std::ostringstream os;
            os << "zz_error + zz_correct = " << total << " does not match detected_valid_z = "
               << detected_valid_z;
            bad.push_back(os.str());
        }
    }
    for (int c = 0; c < 2; ++c) {
        if (x11_correct_in_window[c] > x11_in_window[c])
            bad.push_back("x11 correct > detected in window, channel " + std::to_string(c + 1));
        if (x22_correct_in_window[c] > x22_in_window[c])
            bad.push_back("x22 correct > detected in window, channel " + std::to_string(c + 1));
    }
    return bad;
}

}  // namespace snsqkd
