#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "snsqkd/ledger.hpp"
#include "snsqkd/params.hpp"

namespace snsqkd {

/// A count ledger file: plain "key value" text whose keys mirror the
/// published table rows (Sent-ABCD, Detected-ABCD, Detected-ZZError, ...),
/// so a fixture can be diffed against the table by eye. Ref-* rows carry the
/// published analysis results for comparison output; Window rows carry the
/// per-phase-window sweep (half-width, X11/X22 QBER, detections, published
/// rate).
struct LedgerDocument {
    CountLedger counts;

    std::optional<double> fiber_length_km;
    std::optional<double> fiber_loss_db;
    std::optional<double> survived_after_aopp;
    std::optional<double> qber_z_after;

    std::map<std::string, double> references; ///< Ref-* rows, name -> value

    struct WindowRow {
        double ds_half_deg = 0.0;
        double qber_x11 = 0.0;
        double qber_x22 = 0.0;
        double det_x11 = 0.0;
        double det_x22 = 0.0;
        double key_rate = 0.0; ///< published rate for this window, 0 when unknown
    };
    std::vector<WindowRow> windows;
};

/// Parse failure with 1-based line location.
struct ParseError : std::runtime_error {
    int line;
    ParseError(int line_, const std::string& what_)
        : std::runtime_error("line " + std::to_string(line_) + ": " + what_), line(line_) {}
};

LedgerDocument parse_ledger(std::istream& in);
LedgerDocument parse_ledger_file(const std::string& path);
std::string serialize_ledger(const LedgerDocument& doc);

/// One experiment configuration: protocol, channel, security knobs plus the
/// detector efficiency folded into the relative PLOB reference. Channel arm
/// losses are written in dB and converted to linear transmittance here, at
/// the configuration boundary.
struct RunParams {
    ProtocolParams protocol;
    ChannelModel channel;
    SecurityParams security;
    double detector_eta = 1.0;
};

RunParams parse_config(std::istream& in);
RunParams parse_config_file(const std::string& path);
std::string serialize_config(const RunParams& rp);

}  // namespace snsqkd
