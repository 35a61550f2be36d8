#include "snsqkd/ledger_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "snsqkd/math.hpp"

namespace snsqkd {

namespace {

std::string fmt_num(double v) {
    if (std::abs(v) < 9.007199254740992e15 && v == std::floor(v)) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.0f", v);
        return buf;
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

bool parse_cell_key(const std::string& key, Basis& a, Basis& b, Intensity& ia, Intensity& ib) {
    // e.g. "ZX30": basisA basisB intensityA intensityB
    if (key.size() != 4) return false;
    auto basis_of = [](char c, Basis& out) {
        if (c == 'Z') out = Basis::Z;
        else if (c == 'X') out = Basis::X;
        else return false;
        return true;
    };
    auto intensity_of = [](char c, Intensity& out) {
        if (c < '0' || c > '3') return false;
        out = static_cast<Intensity>(c - '0');
        return true;
    };
    return basis_of(key[0], a) && basis_of(key[1], b) && intensity_of(key[2], ia) &&
           intensity_of(key[3], ib);
}

double to_number(const std::string& tok, int line) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(tok, &pos);
    } catch (const std::exception&) {
        throw ParseError(line, "expected number, got '" + tok + "'");
    }
    if (pos != tok.size()) throw ParseError(line, "trailing characters in number '" + tok + "'");
    return v;
}

}  // namespace

LedgerDocument parse_ledger(std::istream& in) {
    LedgerDocument doc;
    std::string line;
    int line_no = 0;
    bool any = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        any = true;

        if (key == "Window") {
            LedgerDocument::WindowRow w;
            std::string t1, t2, t3, t4, t5, t6;
            if (!(ls >> t1 >> t2 >> t3 >> t4 >> t5)) {
                throw ParseError(line_no, "Window row needs: ds_half qber_x11 qber_x22 det_x11 det_x22 [rate]");
            }
            w.ds_half_deg = to_number(t1, line_no);
            w.qber_x11 = to_number(t2, line_no);
            w.qber_x22 = to_number(t3, line_no);
            w.det_x11 = to_number(t4, line_no);
            w.det_x22 = to_number(t5, line_no);
            if (ls >> t6) w.key_rate = to_number(t6, line_no);
            doc.windows.push_back(w);
            continue;
        }

        std::string tok;
        if (!(ls >> tok)) throw ParseError(line_no, "missing value for key '" + key + "'");
        const double v = to_number(tok, line_no);
        std::string extra;
        if (ls >> extra) throw ParseError(line_no, "unexpected trailing token '" + extra + "'");

        CountLedger& c = doc.counts;
        Basis a, b;
        Intensity ia, ib;
        if (key.rfind("Sent-", 0) == 0 && parse_cell_key(key.substr(5), a, b, ia, ib)) {
            c.sent_cell(a, b, ia, ib) = v;
        } else if (key.rfind("Detected-", 0) == 0 &&
                   parse_cell_key(key.substr(9), a, b, ia, ib)) {
            c.detected_cell(a, b, ia, ib) = v;
        } else if (key == "Sent-ZZ") c.sent_zz = v;
        else if (key == "Detected-Valid-Z") c.detected_valid_z = v;
        else if (key == "Detected-ZZError") c.zz_error = v;
        else if (key == "Detected-ZZCorrect") c.zz_correct = v;
        else if (key == "Detected-Valid-Det1") c.detected_valid[0] = v;
        else if (key == "Detected-Valid-Det2") c.detected_valid[1] = v;
        else if (key == "Detected-XX11-Ds-Ch1") c.x11_in_window[0] = v;
        else if (key == "Detected-XX11-Ds-Ch2") c.x11_in_window[1] = v;
        else if (key == "Correct-XX11-Ds-Ch1") c.x11_correct_in_window[0] = v;
        else if (key == "Correct-XX11-Ds-Ch2") c.x11_correct_in_window[1] = v;
        else if (key == "Detected-XX22-Ds-Ch1") c.x22_in_window[0] = v;
        else if (key == "Detected-XX22-Ds-Ch2") c.x22_in_window[1] = v;
        else if (key == "Correct-XX22-Ds-Ch1") c.x22_correct_in_window[0] = v;
        else if (key == "Correct-XX22-Ds-Ch2") c.x22_correct_in_window[1] = v;
        else if (key == "Sent-XX11-Ds") { c.sent_x11_in_window = v; c.has_sent_in_window = true; }
        else if (key == "Sent-XX22-Ds") { c.sent_x22_in_window = v; c.has_sent_in_window = true; }
        else if (key == "ZZ-Correct-ASend") { c.zz_correct_a_send = v; c.has_z_split = true; }
        else if (key == "ZZ-Correct-BSend") { c.zz_correct_b_send = v; c.has_z_split = true; }
        else if (key == "ZZ-Error-BothSend") { c.zz_error_both_send = v; c.has_z_split = true; }
        else if (key == "ZZ-Error-NoneSend") { c.zz_error_none_send = v; c.has_z_split = true; }
        else if (key == "NTotal") c.n_total = v;
        else if (key == "DsHalfDeg") c.ds_half_deg = v;
        else if (key == "FiberLengthKm") doc.fiber_length_km = v;
        else if (key == "FiberLossDb") doc.fiber_loss_db = v;
        else if (key == "Survived-AfterAOPP") doc.survived_after_aopp = v;
        else if (key == "QBER-Z-After") doc.qber_z_after = v;
        else if (key.rfind("Ref-", 0) == 0) doc.references[key.substr(4)] = v;
        else throw ParseError(line_no, "unknown key '" + key + "'");
    }
    if (!any) throw ParseError(line_no == 0 ? 1 : line_no, "empty ledger file");
    return doc;
}

LedgerDocument parse_ledger_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open ledger file: " + path);
    return parse_ledger(in);
}

std::string serialize_ledger(const LedgerDocument& doc) {
    std::ostringstream out;
    const CountLedger& c = doc.counts;
    auto kv = [&out](const std::string& k, double v) { out << k << " " << fmt_num(v) << "\n"; };

    if (doc.fiber_length_km) kv("FiberLengthKm", *doc.fiber_length_km);
    if (doc.fiber_loss_db) kv("FiberLossDb", *doc.fiber_loss_db);
    if (c.ds_half_deg > 0.0) kv("DsHalfDeg", c.ds_half_deg);
    if (c.n_total > 0.0) kv("NTotal", c.n_total);
    if (c.sent_zz > 0.0) kv("Sent-ZZ", c.sent_zz);

    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            for (int ia = 0; ia < 4; ++ia) {
                for (int ib = 0; ib < 4; ++ib) {
                    const auto ba = static_cast<Basis>(a);
                    const auto bb = static_cast<Basis>(b);
                    const auto xa = static_cast<Intensity>(ia);
                    const auto xb = static_cast<Intensity>(ib);
                    const double s = c.sent_cell(ba, bb, xa, xb);
                    const double d = c.detected_cell(ba, bb, xa, xb);
                    if (s == 0.0 && d == 0.0) continue;
                    kv("Sent-" + cell_name(ba, bb, xa, xb), s);
                    kv("Detected-" + cell_name(ba, bb, xa, xb), d);
                }
            }
        }
    }

    if (c.detected_valid_z > 0.0 || c.zz_error > 0.0 || c.zz_correct > 0.0) {
        kv("Detected-Valid-Z", c.detected_valid_z);
        kv("Detected-ZZError", c.zz_error);
        kv("Detected-ZZCorrect", c.zz_correct);
    }
    if (c.detected_valid[0] > 0.0 || c.detected_valid[1] > 0.0) {
        kv("Detected-Valid-Det1", c.detected_valid[0]);
        kv("Detected-Valid-Det2", c.detected_valid[1]);
    }
    if (c.x11_in_window[0] > 0.0 || c.x11_in_window[1] > 0.0) {
        kv("Detected-XX11-Ds-Ch1", c.x11_in_window[0]);
        kv("Detected-XX11-Ds-Ch2", c.x11_in_window[1]);
        kv("Correct-XX11-Ds-Ch1", c.x11_correct_in_window[0]);
        kv("Correct-XX11-Ds-Ch2", c.x11_correct_in_window[1]);
    }
    if (c.x22_in_window[0] > 0.0 || c.x22_in_window[1] > 0.0) {
        kv("Detected-XX22-Ds-Ch1", c.x22_in_window[0]);
        kv("Detected-XX22-Ds-Ch2", c.x22_in_window[1]);
        kv("Correct-XX22-Ds-Ch1", c.x22_correct_in_window[0]);
        kv("Correct-XX22-Ds-Ch2", c.x22_correct_in_window[1]);
    }
    if (c.has_sent_in_window) {
        kv("Sent-XX11-Ds", c.sent_x11_in_window);
        kv("Sent-XX22-Ds", c.sent_x22_in_window);
    }
    if (c.has_z_split &&
        (c.zz_correct_a_send > 0.0 || c.zz_correct_b_send > 0.0 ||
         c.zz_error_both_send > 0.0 || c.zz_error_none_send > 0.0)) {
        kv("ZZ-Correct-ASend", c.zz_correct_a_send);
        kv("ZZ-Correct-BSend", c.zz_correct_b_send);
        kv("ZZ-Error-BothSend", c.zz_error_both_send);
        kv("ZZ-Error-NoneSend", c.zz_error_none_send);
    }
    if (doc.survived_after_aopp) kv("Survived-AfterAOPP", *doc.survived_after_aopp);
    if (doc.qber_z_after) kv("QBER-Z-After", *doc.qber_z_after);
    for (const auto& [name, value] : doc.references) kv("Ref-" + name, value);
    for (const auto& w : doc.windows) {
        out << "Window " << fmt_num(w.ds_half_deg) << " " << fmt_num(w.qber_x11) << " "
            << fmt_num(w.qber_x22) << " " << fmt_num(w.det_x11) << " " << fmt_num(w.det_x22);
        if (w.key_rate > 0.0) out << " " << fmt_num(w.key_rate);
        out << "\n";
    }
    return out.str();
}

namespace {

struct ConfigEntry {
    const char* key;
    std::function<void(RunParams&, double)> set;
    std::function<double(const RunParams&)> get;
};

const std::vector<ConfigEntry>& config_entries() {
    static const std::vector<ConfigEntry> entries = {
        {"mu1", [](RunParams& r, double v) { r.protocol.mu1 = v; },
         [](const RunParams& r) { return r.protocol.mu1; }},
        {"mu2", [](RunParams& r, double v) { r.protocol.mu2 = v; },
         [](const RunParams& r) { return r.protocol.mu2; }},
        {"mu_z", [](RunParams& r, double v) { r.protocol.mu_z = v; },
         [](const RunParams& r) { return r.protocol.mu_z; }},
        {"p1", [](RunParams& r, double v) { r.protocol.p1 = v; },
         [](const RunParams& r) { return r.protocol.p1; }},
        {"p2", [](RunParams& r, double v) { r.protocol.p2 = v; },
         [](const RunParams& r) { return r.protocol.p2; }},
        {"pz", [](RunParams& r, double v) { r.protocol.pz = v; },
         [](const RunParams& r) { return r.protocol.pz; }},
        {"eps_send", [](RunParams& r, double v) { r.protocol.eps_send = v; },
         [](const RunParams& r) { return r.protocol.eps_send; }},
        {"n_phase_slices",
         [](RunParams& r, double v) { r.protocol.n_phase_slices = static_cast<int>(v); },
         [](const RunParams& r) { return static_cast<double>(r.protocol.n_phase_slices); }},
        {"ds_half_deg", [](RunParams& r, double v) { r.protocol.ds_half_deg = v; },
         [](const RunParams& r) { return r.protocol.ds_half_deg; }},
        {"n_total", [](RunParams& r, double v) { r.protocol.n_total = v; },
         [](const RunParams& r) { return r.protocol.n_total; }},
        {"arm_loss_db_a", [](RunParams& r, double v) { r.channel.eta_a = db_to_linear(v); },
         [](const RunParams& r) { return linear_to_db(r.channel.eta_a); }},
        {"arm_loss_db_b", [](RunParams& r, double v) { r.channel.eta_b = db_to_linear(v); },
         [](const RunParams& r) { return linear_to_db(r.channel.eta_b); }},
        {"dark_rate", [](RunParams& r, double v) { r.channel.dark_rate = v; },
         [](const RunParams& r) { return r.channel.dark_rate; }},
        {"phase_drift_sigma", [](RunParams& r, double v) { r.channel.phase_drift_sigma = v; },
         [](const RunParams& r) { return r.channel.phase_drift_sigma; }},
        {"ref_block_us", [](RunParams& r, double v) { r.channel.ref_block_us = v; },
         [](const RunParams& r) { return r.channel.ref_block_us; }},
        {"misalignment", [](RunParams& r, double v) { r.channel.misalignment = v; },
         [](const RunParams& r) { return r.channel.misalignment; }},
        {"f", [](RunParams& r, double v) { r.security.f = v; },
         [](const RunParams& r) { return r.security.f; }},
        {"eps_cor", [](RunParams& r, double v) { r.security.eps_cor = v; },
         [](const RunParams& r) { return r.security.eps_cor; }},
        {"eps_pa", [](RunParams& r, double v) { r.security.eps_pa = v; },
         [](const RunParams& r) { return r.security.eps_pa; }},
        {"eps_hat", [](RunParams& r, double v) { r.security.eps_hat = v; },
         [](const RunParams& r) { return r.security.eps_hat; }},
        {"eps_rk", [](RunParams& r, double v) { r.security.eps_rk = v; },
         [](const RunParams& r) { return r.security.eps_rk; }},
        {"eps_chernoff", [](RunParams& r, double v) { r.security.eps_chernoff = v; },
         [](const RunParams& r) { return r.security.eps_chernoff; }},
        {"detector_eta", [](RunParams& r, double v) { r.detector_eta = v; },
         [](const RunParams& r) { return r.detector_eta; }},
    };
    return entries;
}

}  // namespace

RunParams parse_config(std::istream& in) {
    RunParams rp;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string key, tok;
        if (!(ls >> key)) continue;
        if (!(ls >> tok)) throw ParseError(line_no, "missing value for key '" + key + "'");
        const double v = to_number(tok, line_no);
        bool found = false;
        for (const auto& e : config_entries()) {
            if (key == e.key) {
                e.set(rp, v);
                found = true;
                break;
            }
        }
        if (!found) throw ParseError(line_no, "unknown key '" + key + "'");
    }
    return rp;
}

RunParams parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    return parse_config(in);
}

std::string serialize_config(const RunParams& rp) {
    std::ostringstream out;
    for (const auto& e : config_entries()) {
        out << e.key << " " << fmt_num(e.get(rp)) << "\n";
    }
    return out.str();
}

}  // namespace snsqkd
