#pragma once

#include <cmath>
#include <stdexcept>

namespace snsqkd {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Shannon binary entropy h(x) = -x log2 x - (1-x) log2 (1-x).
/// h(0) = h(1) = 0 by continuity. Throws std::domain_error outside [0,1].
inline double binary_entropy(double x) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::domain_error("binary_entropy: argument outside [0,1]");
    }
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

/// dB attenuation to linear transmittance (20 dB -> 0.01).
inline double db_to_linear(double loss_db) { return std::pow(10.0, -loss_db / 10.0); }

/// Linear transmittance to dB attenuation.
inline double linear_to_db(double eta) {
    if (!(eta > 0.0)) throw std::domain_error("linear_to_db: transmittance must be > 0");
    return -10.0 * std::log10(eta);
}

/// Wrap an angle into [0, 2*pi).
inline double wrap_angle(double rad) {
    double r = std::fmod(rad, kTwoPi);
    return r < 0.0 ? r + kTwoPi : r;
}

}  // namespace snsqkd
