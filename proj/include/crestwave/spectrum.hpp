#pragma once

#include "crestwave/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace crestwave {

inline constexpr double kInvSqrt3 = 0.57735026918962576451;

// Eigenpair of -phi'' = mu phi on (0, pi/2), phi'(0) = 0, phi'(pi/2) = phi(pi/2)/sqrt(3).
// For j >= 1, tau > 0 and phi = cos(tau z); for j = 0, tau holds s with mu = -s^2 and phi = cosh(s z).
struct Eigenpair {
    int index = 0;
    double tau = 0.0;
    double mu = 0.0;

    double phi(double z) const { return index == 0 ? std::cosh(tau * z) : std::cos(tau * z); }
    double dphi(double z) const { return index == 0 ? tau * std::sinh(tau * z) : -tau * std::sin(tau * z); }
};

namespace detail {

// Characteristic function of the j-th root and its derivative.
inline double char_fn(int j, double x) {
    const double pi = std::numbers::pi;
    if (j == 0) return x * std::tanh(0.5 * pi * x) - kInvSqrt3;
    return x + kInvSqrt3 / std::tan(0.5 * pi * x);
}

inline double char_fn_deriv(int j, double x) {
    const double pi = std::numbers::pi;
    if (j == 0) {
        const double ch = std::cosh(0.5 * pi * x);
        return std::tanh(0.5 * pi * x) + 0.5 * pi * x / (ch * ch);
    }
    const double s = std::sin(0.5 * pi * x);
    return 1.0 - 0.5 * pi * kInvSqrt3 / (s * s);
}

} // namespace detail

// Bisection on the pole-free bracket, then Newton polish.
inline Eigenpair solve_eigenpair(int j) {
    if (j < 0) throw DomainError("spectrum: index must be non-negative");
    double lo = j == 0 ? 0.0 : 2.0 * j - 1.0;
    double hi = j == 0 ? 2.0 : 2.0 * j - 1e-9;
    double flo = detail::char_fn(j, lo), fhi = detail::char_fn(j, hi);
    if (!(flo * fhi < 0.0))
        throw BracketError("spectrum: no sign change on (" + std::to_string(lo) + ", " + std::to_string(hi) +
                           ") for j = " + std::to_string(j));
    for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = detail::char_fn(j, mid);
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 20; ++it) {
        const double step = detail::char_fn(j, x) / detail::char_fn_deriv(j, x);
        const double next = x - step;
        if (next <= lo || next >= hi) break;
        x = next;
        if (std::abs(step) < 1e-16 * std::abs(x)) break;
    }
    Eigenpair e;
    e.index = j;
    e.tau = x;
    e.mu = j == 0 ? -x * x : x * x;
    return e;
}

// Residual of the transcendental equation at the stored root.
inline double characteristic_residual(const Eigenpair& e) { return detail::char_fn(e.index, e.tau); }

inline double eigenfunction_value(const Eigenpair& e, double z) {
    if (!(z >= 0.0 && z <= 0.5 * std::numbers::pi))
        throw DomainError("spectrum: z = " + std::to_string(z) + " outside [0, pi/2]");
    return e.phi(z);
}

// Exponent (3/2)(tau_1 - 1) of the remainder in the surface expansion.
inline double remainder_exponent() { return 1.5 * (solve_eigenpair(1).tau - 1.0); }

inline double remainder_exponent(double tau1) { return 1.5 * (tau1 - 1.0); }

// q-exponent of the kernel mode phi_j(z) exp(sign (3/2) tau_j q).
inline double mode_decay_rate(int j, int sign) {
    if (j < 1) throw DomainError("spectrum: mode_decay_rate needs j >= 1");
    if (sign != 1 && sign != -1) throw DomainError("spectrum: sign must be +1 or -1");
    return sign * 1.5 * solve_eigenpair(j).tau;
}

} // namespace crestwave
