#include "snsqkd/params.hpp"

#include <sstream>
#include <stdexcept>

namespace snsqkd {

namespace {
bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }
bool in_open_unit(double x) { return x > 0.0 && x < 1.0; }
}  // namespace

std::vector<std::string> validate(const ProtocolParams& p,
                                  const ChannelModel& c,
                                  const SecurityParams& s) {
    std::vector<std::string> bad;

    if (!(p.mu1 > 0.0)) bad.push_back("mu1 must be > 0");
    if (!(p.mu1 < p.mu2)) bad.push_back("mu1 < mu2 required");
    if (!(p.mu_z > 0.0)) bad.push_back("mu_z must be > 0");
    if (!in_unit(p.p1) || !in_unit(p.p2) || !in_unit(p.p1 + p.p2))
        bad.push_back("probability overflow: need 0 <= p1+p2 <= 1");
    if (!in_unit(p.pz)) bad.push_back("pz must lie in [0,1]");
    if (!in_unit(p.eps_send)) bad.push_back("eps_send must lie in [0,1]");
    if (p.n_phase_slices < 2 || p.n_phase_slices % 2 != 0)
        bad.push_back("n_phase_slices must be even and >= 2");
    if (!(p.ds_half_deg > 0.0 && p.ds_half_deg <= 90.0))
        bad.push_back("ds_half_deg must lie in (0,90]");
    if (!(p.n_total > 0.0)) bad.push_back("n_total must be > 0");

    if (!(c.eta_a > 0.0 && c.eta_a <= 1.0)) bad.push_back("eta_a must lie in (0,1]");
    if (!(c.eta_b > 0.0 && c.eta_b <= 1.0)) bad.push_back("eta_b must lie in (0,1]");
    if (!(c.dark_rate >= 0.0 && c.dark_rate < 1.0)) bad.push_back("dark_rate must lie in [0,1)");
    if (!(c.phase_drift_sigma >= 0.0)) bad.push_back("phase_drift_sigma must be >= 0");
    if (!(c.ref_block_us > 0.0)) bad.push_back("ref_block_us must be > 0");
    if (!in_unit(c.misalignment)) bad.push_back("misalignment must lie in [0,1]");

    if (!(s.f >= 1.0)) bad.push_back("error-correction efficiency f must be >= 1");
    if (!in_open_unit(s.eps_cor)) bad.push_back("eps_cor must lie in (0,1)");
    if (!in_open_unit(s.eps_pa)) bad.push_back("eps_pa must lie in (0,1)");
    if (!in_open_unit(s.eps_hat)) bad.push_back("eps_hat must lie in (0,1)");
    if (!in_open_unit(s.eps_rk)) bad.push_back("eps_rk must lie in (0,1)");
    if (!in_open_unit(s.eps_chernoff)) bad.push_back("eps_chernoff must lie in (0,1)");

    return bad;
}

void validate_or_throw(const ProtocolParams& p,
                       const ChannelModel& c,
                       const SecurityParams& s) {
    const auto bad = validate(p, c, s);
    if (bad.empty()) return;
    std::ostringstream os;
    os << "invalid configuration:";
    for (const auto& m : bad) os << "\n  - " << m;
    throw std::invalid_argument(os.str());
}

}  // namespace snsqkd
