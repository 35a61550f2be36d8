#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "snsqkd/aopp.hpp"
#include "snsqkd/channel_sim.hpp"
#include "snsqkd/keyrate.hpp"
#include "snsqkd/ledger_io.hpp"
#include "snsqkd/math.hpp"

using nlohmann::json;
using namespace snsqkd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitValidation = 2;
constexpr int kExitInsufficient = 3;

constexpr const char* kCurveColumns =
    "loss_db,rate,plob_abs,plob_rel,qber_z,qber_x11,n1_lb,n1_prime,e1ph_ub,e1ph_prime,"
    "nt_prime,ez_prime,ok,error";

std::string config_echo(const RunParams& rp) {
    std::istringstream in(serialize_config(rp));
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) out << "# cfg " << line << "\n";
    return out.str();
}

json report_to_json(const KeyRateReport& r) {
    json j;
    j["qber_z_before"] = r.qber_z_before;
    j["qber_x11"] = r.qber_x11;
    j["s01_lb"] = r.s01_lb;
    j["s10_lb"] = r.s10_lb;
    j["s1_lb"] = r.s1_lb;
    j["n10_lb"] = r.n10_lb;
    j["n01_lb"] = r.n01_lb;
    j["n1_lb"] = r.n1_lb;
    j["e1ph_ub"] = r.e1ph_ub;
    j["n1_prime"] = r.n1_prime;
    j["e1ph_prime"] = r.e1ph_prime;
    j["nt_prime"] = r.nt_prime;
    j["ez_prime"] = r.ez_prime;
    j["rate"] = r.rate;
    j["plob_abs"] = r.plob_abs;
    j["plob_rel"] = r.plob_rel;
    j["insufficient"] = r.insufficient;
    j["diagnostics"] = {{"u", r.diag.u},          {"n", r.diag.n},
                        {"k", r.diag.k},          {"r", r.diag.r},
                        {"m_bar", r.diag.m_bar},  {"e_tau", r.diag.e_tau},
                        {"m_bar_s", r.diag.m_bar_s}, {"n_g", r.diag.n_g},
                        {"n_odd", r.diag.n_odd},  {"n_odd_estimated", r.diag.n_odd_estimated},
                        {"q_bob_ones", r.diag.q_bob_ones}};
    j["warnings"] = r.warnings;
    return j;
}

int run_validate(const std::string& params_path, const std::string& ledger_path) {
    const RunParams rp = parse_config_file(params_path);
    const auto bad = validate(rp.protocol, rp.channel, rp.security);
    for (const auto& m : bad) std::cerr << "invalid: " << m << "\n";
    if (!ledger_path.empty()) {
        const LedgerDocument doc = parse_ledger_file(ledger_path);
        const auto lb = doc.counts.check_invariants();
        for (const auto& m : lb) std::cerr << "ledger: " << m << "\n";
        if (!lb.empty()) return kExitValidation;
    }
    if (!bad.empty()) return kExitValidation;
    std::cout << "configuration valid\n";
    return kExitOk;
}

int run_replay(const std::string& params_path, const std::string& ledger_path, double ds_override,
               const std::string& out_path) {
    const RunParams rp = parse_config_file(params_path);
    {
        const auto bad = validate(rp.protocol, rp.channel, rp.security);
        if (!bad.empty()) {
            for (const auto& m : bad) std::cerr << "invalid: " << m << "\n";
            return kExitValidation;
        }
    }
    const LedgerDocument doc = parse_ledger_file(ledger_path);
    {
        const auto lb = doc.counts.check_invariants();
        if (!lb.empty()) {
            for (const auto& m : lb) std::cerr << "ledger: " << m << "\n";
            return kExitValidation;
        }
    }

    ProtocolParams params = rp.protocol;
    if (doc.counts.n_total > 0.0) params.n_total = doc.counts.n_total;

    AnalysisOptions opt;
    opt.nt_prime = doc.survived_after_aopp;
    opt.ez_prime = doc.qber_z_after;
    opt.loss_db = doc.fiber_loss_db;
    opt.detector_eta = rp.detector_eta;

    KeyRateReport rep;
    if (ds_override > 0.0) {
        LedgerDocument::WindowRow row;
        bool found = false;
        for (const auto& w : doc.windows) {
            if (std::abs(w.ds_half_deg - ds_override) < 1e-9) {
                row = w;
                found = true;
                break;
            }
        }
        if (!found) {
            std::cerr << "no window row for Ds/2 = " << ds_override << " in " << ledger_path << "\n";
            return kExitValidation;
        }
        rep = analyze_window_row(doc, params, rp.security, row, opt);
    } else {
        rep = analyze_ledger(doc.counts, params, rp.security, opt);
    }

    json j;
    j["command"] = "replay";
    j["ledger_file"] = ledger_path;
    j["config"] = json::object();
    {
        std::istringstream cfg(serialize_config(rp));
        std::string line;
        while (std::getline(cfg, line)) {
            const auto sp = line.find(' ');
            j["config"][line.substr(0, sp)] = std::stod(line.substr(sp + 1));
        }
    }
    j["report"] = report_to_json(rep);

    if (!doc.references.empty()) {
        json cmp;
        auto delta = [&cmp, &doc](const char* ref_name, const char* label, double computed) {
            const auto it = doc.references.find(ref_name);
            if (it == doc.references.end()) return;
            cmp[label] = {{"computed", computed},
                          {"published", it->second},
                          {"delta_pct", 100.0 * (computed / it->second - 1.0)}};
        };
        delta("n1-Before", "n1_before_aopp", rep.n1_lb);
        delta("e1ph-Before", "e1ph_before_aopp", rep.e1ph_ub);
        delta("n1-After", "n1_after_aopp", rep.n1_prime);
        delta("e1ph-After", "e1ph_after_aopp", rep.e1ph_prime);
        delta("QBER-Z-Before", "qber_z_before", rep.qber_z_before);
        delta("QBER-X11", "qber_x11", rep.qber_x11);
        delta("KeyRate", "key_rate", rep.rate);
        j["published_comparison"] = cmp;
    }

    const std::string text = j.dump(2) + "\n";
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << text;
    }
    std::cout << text;
    return rep.insufficient ? kExitInsufficient : kExitOk;
}

int run_simulate(const std::string& params_path, std::uint64_t pairs, std::uint64_t seed,
                 int threads, bool capture, const std::string& out_path) {
    const RunParams rp = parse_config_file(params_path);
    {
        const auto bad = validate(rp.protocol, rp.channel, rp.security);
        if (!bad.empty()) {
            for (const auto& m : bad) std::cerr << "invalid: " << m << "\n";
            return kExitValidation;
        }
    }
    SimOptions so;
    so.capture_raw_keys = capture;
    so.n_threads = threads;
    const SimResult sim = simulate(rp.protocol, rp.channel, pairs, seed, so);

    LedgerDocument doc;
    doc.counts = sim.ledger;
    if (capture) {
        try {
            const AoppOutcome aopp = aopp_pair(sim.raw_keys, seed);
            doc.survived_after_aopp = static_cast<double>(aopp.n_t_prime());
            doc.qber_z_after = aopp.survived_error_rate;
            std::cerr << "AOPP: " << aopp.n_g << " pairs, " << aopp.n_t_prime()
                      << " survivors, post-AOPP error rate " << aopp.survived_error_rate << "\n";
        } catch (const std::invalid_argument& e) {
            std::cerr << "AOPP skipped: " << e.what() << "\n";
        }
    }

    std::ostringstream out;
    out << "# snsqkd simulate --pairs " << pairs << " --seed " << seed;
    if (capture) out << " --capture-keys";
    out << "\n";
    out << config_echo(rp);
    out << serialize_ledger(doc);
    if (!out_path.empty()) {
        std::ofstream f(out_path);
        f << out.str();
    } else {
        std::cout << out.str();
    }

    const double qz = sim.ledger.detected_valid_z > 0.0
                          ? sim.ledger.zz_error / sim.ledger.detected_valid_z
                          : 0.0;
    std::cerr << "simulated " << pairs << " pulse pairs, "
              << static_cast<std::uint64_t>(sim.ledger.detected_valid[0] +
                                            sim.ledger.detected_valid[1])
              << " one-detector events, Z QBER " << qz << "\n";
    return kExitOk;
}

std::vector<double> parse_grid(const std::string& spec) {
    // "a:b:step" inclusive grid, or a single value
    std::vector<double> grid;
    const auto c1 = spec.find(':');
    if (c1 == std::string::npos) {
        grid.push_back(std::stod(spec));
        return grid;
    }
    const auto c2 = spec.find(':', c1 + 1);
    if (c2 == std::string::npos) throw std::runtime_error("grid must be a:b:step");
    const double a = std::stod(spec.substr(0, c1));
    const double b = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
    const double step = std::stod(spec.substr(c2 + 1));
    if (!(step > 0.0)) throw std::runtime_error("grid step must be > 0");
    for (double x = a; x <= b + 1e-9; x += step) grid.push_back(x);
    return grid;
}

int run_curve(const std::string& params_path, const std::string& grid_spec,
              const std::string& mode_str, std::uint64_t seed, std::uint64_t pairs,
              double ref_loss_db, const std::string& out_path) {
    const RunParams rp = parse_config_file(params_path);
    {
        const auto bad = validate(rp.protocol, rp.channel, rp.security);
        if (!bad.empty()) {
            for (const auto& m : bad) std::cerr << "invalid: " << m << "\n";
            return kExitValidation;
        }
    }
    const std::vector<double> grid = parse_grid(grid_spec);
    const CurveMode mode = mode_str == "mc" ? CurveMode::monte_carlo : CurveMode::expected;
    const auto points = simulate_rate_curve(rp.protocol, rp.channel, ref_loss_db, grid,
                                            rp.security, mode, seed, pairs, rp.detector_eta);

    std::ostringstream out;
    out << "# snsqkd curve --loss-db " << grid_spec << " --mode " << mode_str << " --seed " << seed
        << "\n";
    out << config_echo(rp);
    out << kCurveColumns << "\n";
    char buf[512];
    for (const auto& p : points) {
        const auto& r = p.report;
        std::snprintf(buf, sizeof(buf),
                      "%.4f,%.9e,%.9e,%.9e,%.8f,%.8f,%.3f,%.3f,%.8f,%.8f,%.3f,%.8f,%d,%s",
                      p.total_loss_db, p.rate_per_pulse, p.plob_abs, p.plob_rel, r.qber_z_before,
                      r.qber_x11, r.n1_lb, r.n1_prime, r.e1ph_ub, r.e1ph_prime, r.nt_prime,
                      r.ez_prime, p.ok ? 1 : 0, p.error.c_str());
        out << buf << "\n";
    }
    if (!out_path.empty()) {
        std::ofstream f(out_path);
        f << out.str();
    } else {
        std::cout << out.str();
    }
    return kExitOk;
}

int run_optimize(const std::string& params_path, const std::string& windows_from,
                 const std::string& out_path) {
    const RunParams rp = parse_config_file(params_path);
    {
        const auto bad = validate(rp.protocol, rp.channel, rp.security);
        if (!bad.empty()) {
            for (const auto& m : bad) std::cerr << "invalid: " << m << "\n";
            return kExitValidation;
        }
    }

    if (!windows_from.empty()) {
        // restricted optimization: rank the fixture's phase windows
        const LedgerDocument doc = parse_ledger_file(windows_from);
        if (doc.windows.empty()) {
            std::cerr << "ledger has no window-sweep rows\n";
            return kExitValidation;
        }
        ProtocolParams params = rp.protocol;
        if (doc.counts.n_total > 0.0) params.n_total = doc.counts.n_total;
        AnalysisOptions opt;
        opt.detector_eta = rp.detector_eta;
        double best_rate = -1.0;
        double best_ds = 0.0;
        std::cout << "ds_half_deg,rate,published_rate\n";
        for (const auto& w : doc.windows) {
            const KeyRateReport r = analyze_window_row(doc, params, rp.security, w, opt);
            std::cout << w.ds_half_deg << "," << r.rate << "," << w.key_rate << "\n";
            if (r.rate > best_rate) {
                best_rate = r.rate;
                best_ds = w.ds_half_deg;
            }
        }
        std::cout << "best ds_half_deg " << best_ds << " rate " << best_rate << "\n";
        return best_rate > 0.0 ? kExitOk : kExitInsufficient;
    }

    const ProtocolParams best =
        optimize_params(rp.channel, rp.protocol.n_total, rp.security, rp.protocol);
    RunParams out_rp = rp;
    out_rp.protocol = best;

    const CountLedger led = expected_ledger(best, rp.channel);
    AnalysisOptions opt;
    opt.rates_are_expected = true;
    opt.detector_eta = rp.detector_eta;
    const KeyRateReport rep = analyze_ledger(led, best, rp.security, opt);

    std::ostringstream out;
    out << "# snsqkd optimize, achieved expected-mode rate " << rep.rate << "\n";
    out << serialize_config(out_rp);
    if (!out_path.empty()) {
        std::ofstream f(out_path);
        f << out.str();
    }
    std::cout << out.str();
    return rep.rate > 0.0 ? kExitOk : kExitInsufficient;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "snsqkd: sending-or-not-sending twin-field QKD simulator and finite-key analysis\n"
        "Exit codes: 0 success, 2 validation failure, 3 insufficient statistics."};
    app.require_subcommand(1);

    std::string params_path, ledger_path, out_path, mode = "expected", grid_spec = "89.1";
    std::string windows_from;
    std::uint64_t pairs = 1000000, seed = 1;
    int threads = 1;
    double ds_override = 0.0, ref_loss_db = 89.1;
    bool capture = false;

    auto* v = app.add_subcommand("validate", "Validate a configuration (and optionally a ledger)");
    v->add_option("--params", params_path, "parameter/config file")->required();
    v->add_option("--ledger", ledger_path, "count ledger file");

    auto* r = app.add_subcommand("replay",
                                 "Run the decoy + AOPP + key-rate chain on a count ledger; "
                                 "prints a JSON report with published-value comparison deltas");
    r->add_option("--params", params_path, "parameter/config file")->required();
    r->add_option("--ledger", ledger_path, "count ledger file")->required();
    r->add_option("--ds", ds_override, "replay one window-sweep row (Ds/2 in degrees)");
    r->add_option("--out", out_path, "also write the JSON report here");

    auto* s = app.add_subcommand("simulate",
                                 "Monte Carlo simulation; writes a ledger in the fixture text "
                                 "format with the config echoed in the header");
    s->add_option("--params", params_path, "parameter/config file")->required();
    s->add_option("--pairs", pairs, "pulse pairs to simulate")->required();
    s->add_option("--seed", seed, "64-bit seed")->required();
    s->add_option("--threads", threads, "worker threads (result is thread-count invariant)");
    s->add_flag("--capture-keys", capture, "keep raw Z key bits in memory (summary only)");
    s->add_option("--out", out_path, "output ledger file (stdout when omitted)");

    auto* c = app.add_subcommand("curve",
                                 std::string("Rate-versus-loss sweep; CSV columns: ") +
                                     kCurveColumns);
    c->add_option("--params", params_path, "parameter/config file")->required();
    c->add_option("--loss-db", grid_spec, "loss grid a:b:step in dB, or one value")->required();
    c->add_option("--mode", mode, "expected | mc")->check(CLI::IsMember({"expected", "mc"}));
    c->add_option("--seed", seed, "seed for mc mode");
    c->add_option("--pairs", pairs, "pulse pairs per mc point (default: n_total)");
    c->add_option("--ref-loss-db", ref_loss_db,
                  "loss at which the configured arm transmittances were calibrated");
    c->add_option("--out", out_path, "output CSV file (stdout when omitted)");

    auto* o = app.add_subcommand("optimize",
                                 "Derivative-free protocol-parameter optimization (expected "
                                 "mode), or --windows-from for the restricted phase-window sweep");
    o->add_option("--params", params_path, "parameter/config file")->required();
    o->add_option("--windows-from", windows_from, "ledger with window-sweep rows");
    o->add_option("--out", out_path, "write the optimized config here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (v->parsed()) return run_validate(params_path, ledger_path);
        if (r->parsed()) return run_replay(params_path, ledger_path, ds_override, out_path);
        if (s->parsed()) return run_simulate(params_path, pairs, seed, threads, capture, out_path);
        if (c->parsed())
            return run_curve(params_path, grid_spec, mode, seed, pairs, ref_loss_db, out_path);
        if (o->parsed()) return run_optimize(params_path, windows_from, out_path);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
