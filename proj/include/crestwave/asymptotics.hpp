#pragma once

#include "crestwave/coefficients.hpp"
#include "crestwave/error.hpp"
#include "crestwave/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace crestwave {

struct StripPoint {
    double q = 0.0;
    double z = 0.0;
};

// Value and first/second partial derivatives of a strip function.
struct StripJet {
    double v = 0.0, q = 0.0, z = 0.0, qq = 0.0, zz = 0.0, qz = 0.0;
};

// Stokes corner flow sign (2/3) e^{-3q/2} cos z.
inline double stokes_corner(const StripPoint& p, int sign = 1) {
    return sign * (2.0 / 3.0) * std::exp(-1.5 * p.q) * std::cos(p.z);
}

inline StripJet stokes_corner_jet(const StripPoint& p, int sign = 1, double rate = 1.5) {
    const double e = sign * (2.0 / 3.0) * std::exp(-rate * p.q);
    const double c = std::cos(p.z), s = std::sin(p.z);
    return {e * c, -rate * e * c, -e * s, rate * rate * e * c, -e * c, rate * e * s};
}

// Forced model solution U* = (1/12)(3 - 2 cos(4z/3)) omega1 e^{-2q}.
inline double u_star(const StripPoint& p, double omega1) {
    return omega1 / 12.0 * (3.0 - 2.0 * std::cos(4.0 * p.z / 3.0)) * std::exp(-2.0 * p.q);
}

// Partner V* = (2/3) U*_q = -(4/3) U*.
inline double v_star(const StripPoint& p, double omega1) { return -(4.0 / 3.0) * u_star(p, omega1); }

inline StripJet u_star_jet(const StripPoint& p, double omega1) {
    const double e = omega1 / 12.0 * std::exp(-2.0 * p.q);
    const double c = std::cos(4.0 * p.z / 3.0), s = std::sin(4.0 * p.z / 3.0);
    const double v = e * (3.0 - 2.0 * c);
    const double vz = e * (8.0 / 3.0) * s;
    return {v, -2.0 * v, vz, 4.0 * v, e * (32.0 / 9.0) * c, -2.0 * vz};
}

struct XiValue {
    double xi = 0.0, xi_q = 0.0, xi_qq = 0.0;
};

// Two-term expansion (omega1/3) e^{-q/2} + lambda omega1^2 e^{-q}, with term-wise derivatives.
inline XiValue xi_series(double q, const ExpansionCoefficients& c) {
    const double a = c.omega1 / 3.0 * std::exp(-0.5 * q);
    const double b = c.lambda * c.omega1 * c.omega1 * std::exp(-q);
    return {a + b, -0.5 * a - b, 0.25 * a + b};
}

// Leading term xi~ = (omega1/3) e^{-q/2} alone.
inline XiValue xi_leading(double q, double omega1) {
    const double a = omega1 / 3.0 * std::exp(-0.5 * q);
    return {a, -0.5 * a, 0.25 * a};
}

struct PsiSeriesOptions {
    double radial_exponent = 1.5;  // rho^{3/2}; 3.0 reproduces the squared-sum reading
    bool include_u_star = false;   // add U* with zeta from the xi series
};

// psi = 1 - (2/3) rho^{3/2} cos((3/2)(theta + pi/2)) [- U*].
inline double psi_series(double x, double y, const CrestFrame& frame, const ExpansionCoefficients& c,
                         const PsiSeriesOptions& opt = {}) {
    const LogPoint lp = log_map(x, y, frame);
    const double half_pi = 0.5 * std::numbers::pi;
    if (!opt.include_u_star) {
        return 1.0 - (2.0 / 3.0) * std::exp(-opt.radial_exponent * lp.t) * std::cos(1.5 * (lp.theta + half_pi));
    }
    const double zeta = -std::numbers::pi / 6.0 + xi_series(lp.t, c).xi;
    const StripCoord sc = flatten(lp.t, std::min(lp.theta, zeta), zeta);
    const StripPoint p{sc.q, sc.z};
    return 1.0 - (2.0 / 3.0) * std::exp(-opt.radial_exponent * lp.t) * std::cos(sc.z) - u_star(p, c.omega1);
}

// Max-norm residuals of the corner flow in the limit system on an n x n grid of [0, qmax] x [0, pi/2].
struct CornerResidual {
    double interior = 0.0, bottom = 0.0, top = 0.0, bernoulli = 0.0;
    double max() const { return std::max({interior, bottom, top, bernoulli}); }
};

inline CornerResidual stokes_corner_residual(int sign, int n = 101, double qmax = 10.0) {
    CornerResidual r;
    const double half_pi = 0.5 * std::numbers::pi;
    for (int i = 0; i < n; ++i) {
        const double q = qmax * i / (n - 1);
        for (int j = 0; j < n; ++j) {
            const double z = half_pi * j / (n - 1);
            const StripJet u = stokes_corner_jet({q, z}, sign);
            r.interior = std::max(r.interior, std::abs((2.0 / 3.0) * u.qq + 1.5 * u.zz));
        }
        const StripJet b = stokes_corner_jet({q, 0.0}, sign);
        const StripJet t = stokes_corner_jet({q, half_pi}, sign);
        r.bottom = std::max(r.bottom, std::abs(b.z));
        r.top = std::max(r.top, std::abs(t.v));
        r.bernoulli =
            std::max(r.bernoulli, std::abs((4.0 / 9.0) * t.q * t.q + t.z * t.z - (4.0 / 9.0) * std::exp(-3.0 * q)));
    }
    return r;
}

} // namespace crestwave
