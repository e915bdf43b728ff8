#pragma once

#include <cmath>

namespace porecat {

/// C^2 smooth positive part with transition width `eps`: exactly 0 for
/// x <= 0, exactly x for x >= eps, quintic blend eps*(6s^3 - 8s^4 + 3s^5)
/// with s = x/eps in between. Monotone; first and second derivatives bounded.
inline double zeta_plus(double x, double eps) {
    if (x <= 0.0) return 0.0;
    if (x >= eps) return x;
    const double s = x / eps;
    return eps * s * s * s * (6.0 + s * (-8.0 + 3.0 * s));
}

inline double zeta_plus_derivative(double x, double eps) {
    if (x <= 0.0) return 0.0;
    if (x >= eps) return 1.0;
    const double s = x / eps;
    return s * s * (18.0 + s * (-32.0 + 15.0 * s));
}

/// Bounded monotone saturation with zeta_b(0) = 0 and slope 1 at the origin.
inline double zeta_b(double x, double cap) { return cap * std::tanh(x / cap); }

inline double zeta_b_derivative(double x, double cap) {
    const double t = std::tanh(x / cap);
    return 1.0 - t * t;
}

} // namespace porecat
