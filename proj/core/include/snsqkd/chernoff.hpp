#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace snsqkd {

// Multiplicative Chernoff bound conversions between expected values and
// observed counts, all at per-invocation failure probability eps.
//
// phi^U / phi^L map an expected value x to the largest/smallest observation
// compatible with it:
//   upper: delta solves exp(-delta^2 x / (2 + delta)) = eps,  phi^U = x(1+delta)
//   lower: delta solves exp(-delta^2 x / 2) = eps,            phi^L = x(1-delta)
// Both have closed forms with L = ln(1/eps). mean_upper_bound /
// mean_lower_bound are the inverse maps from an observed count to a
// confidence bound on the expected value (the largest E with phi^L(E) <= obs,
// the smallest E with phi^U(E) >= obs).

namespace detail {
inline double log_inv(double eps) {
    if (!(eps > 0.0 && eps < 1.0)) {
        // eps == 1 is admitted as the degenerate "no fluctuation" limit in
        // which every bound collapses to the identity.
        if (eps == 1.0) return 0.0;
        throw std::domain_error("chernoff: eps must lie in (0,1]");
    }
    return std::log(1.0 / eps);
}
}  // namespace detail

/// Largest observation compatible with expected value x at failure prob eps.
/// phi^U(0) = 0: a nonnegative count with zero mean is almost surely zero.
inline double chernoff_upper(double x, double eps) {
    const double L = detail::log_inv(eps);
    if (x < 0.0) throw std::domain_error("chernoff_upper: negative input");
    if (x == 0.0 || L == 0.0) return x;
    return x + 0.5 * (L + std::sqrt(L * L + 8.0 * L * x));
}

/// Smallest observation compatible with expected value x at failure prob eps.
inline double chernoff_lower(double x, double eps) {
    const double L = detail::log_inv(eps);
    if (x < 0.0) throw std::domain_error("chernoff_lower: negative input");
    if (L == 0.0) return x;
    return std::max(0.0, x - std::sqrt(2.0 * L * x));
}

/// Upper confidence bound on the expected value given an observed count.
inline double mean_upper_bound(double observed, double eps) {
    const double L = detail::log_inv(eps);
    if (observed < 0.0) throw std::domain_error("mean_upper_bound: negative input");
    if (L == 0.0) return observed;
    return observed + L + std::sqrt(2.0 * L * observed + L * L);
}

/// Lower confidence bound on the expected value given an observed count.
inline double mean_lower_bound(double observed, double eps) {
    const double L = detail::log_inv(eps);
    if (observed < 0.0) throw std::domain_error("mean_lower_bound: negative input");
    if (L == 0.0) return observed;
    const double e = observed + 0.5 * L - std::sqrt(2.0 * L * observed + 0.25 * L * L);
    return std::max(0.0, e);
}

}  // namespace snsqkd
