#pragma once

#include "crestwave/coefficients.hpp"
#include "crestwave/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace crestwave {

inline constexpr double kSingularGuard = 1e-12;

struct CrestFrame {
    double r = 1.0;
    double delta1 = 0.5;

    void validate() const {
        if (!(r > 0.0) || !(delta1 > 0.0 && delta1 < r))
            throw DomainError("frame: need r > 0 and 0 < delta1 < r");
    }
};

struct SurfaceAngle {
    double zeta = -std::numbers::pi / 6.0;
    double zeta_t = 0.0;
};

struct LogPoint {
    double t = 0.0;
    double theta = 0.0;
};

struct PhysPoint {
    double x = 0.0;
    double y = 0.0;
};

struct StripCoord {
    double q = 0.0;
    double z = 0.0;
};

inline LogPoint log_map(double x, double y, const CrestFrame& frame) {
    const double rho = std::hypot(x, y - frame.r);
    if (rho == 0.0) throw DomainError("log_map: stagnation point has no log coordinates");
    if (rho > frame.delta1 * (1.0 + 1e-12))
        throw DomainError("log_map: rho = " + std::to_string(rho) + " exceeds delta1");
    return {-std::log(rho), std::atan2(y - frame.r, x)};
}

inline PhysPoint log_unmap(double t, double theta, const CrestFrame& frame) {
    if (t < -std::log(frame.delta1) - 1e-12)
        throw DomainError("log_unmap: t below -ln(delta1)");
    const double rho = std::exp(-t);
    return {rho * std::cos(theta), frame.r + rho * std::sin(theta)};
}

// z = (pi/2)(theta + pi/2)/(zeta + pi/2); exact endpoints map to exactly 0 and pi/2.
inline StripCoord flatten(double t, double theta, double zeta_at_t) {
    const double half_pi = 0.5 * std::numbers::pi;
    const double width = zeta_at_t + half_pi;
    if (!(width > 0.0)) throw DomainError("flatten: zeta must exceed -pi/2");
    if (theta < -half_pi - 1e-12 || theta > zeta_at_t + 1e-12)
        throw DomainError("flatten: theta outside [-pi/2, zeta]");
    if (theta == zeta_at_t) return {t, half_pi};
    if (theta == -half_pi) return {t, 0.0};
    return {t, half_pi * (theta + half_pi) / width};
}

// Inverse of flatten for fixed zeta.
inline double unflatten_theta(double z, double zeta_at_t) {
    const double half_pi = 0.5 * std::numbers::pi;
    if (z == half_pi) return zeta_at_t;
    if (z == 0.0) return -half_pi;
    return -half_pi + z * (zeta_at_t + half_pi) / half_pi;
}

inline double zeta_t_from_eta_x(double eta_x, double zeta) {
    const double den = eta_x * std::sin(zeta) + std::cos(zeta);
    if (std::abs(den) < kSingularGuard) throw SingularityError("zeta_t_from_eta_x: singular denominator");
    return -(eta_x * std::cos(zeta) - std::sin(zeta)) / den;
}

inline double eta_x_from_zeta(double zeta, double zeta_t) {
    const double den = std::cos(zeta) + zeta_t * std::sin(zeta);
    if (std::abs(den) < kSingularGuard) throw SingularityError("eta_x_from_zeta: singular denominator");
    return (std::sin(zeta) - zeta_t * std::cos(zeta)) / den;
}

// Quadratic expansion of eta_x_from_zeta(-pi/6 + xi, xi_t) about the Stokes angle.
inline double eta_x_quadratic(double xi, double xi_t) {
    const double d = xi - xi_t;
    return -kInvSqrt3 + (4.0 / 3.0) * d - (4.0 / 3.0) * kInvSqrt3 * d * d;
}

// rho = sqrt(x^2 + (r - eta)^2) along the surface, eta from the integrated series.
// Accurate to the series order: relative error O(x^{remainder_exp}).
inline double rho_of_x(double x, const ExpansionCoefficients& c) {
    if (!(x > 0.0)) throw DomainError("t_of_x: x must be positive");
    const double drop = -(eta_series(x, 0.0, c));  // r - eta(x)
    return std::hypot(x, drop);
}

inline double t_of_x(double x, const ExpansionCoefficients& c) { return -std::log(rho_of_x(x, c)); }

// Two-term form e^{-t} = (2/sqrt3) x (1 - kappa sqrt(x) / (2 sqrt3)), error O(x^2).
inline double t_of_x_two_term(double x, const ExpansionCoefficients& c) {
    if (!(x > 0.0)) throw DomainError("t_of_x: x must be positive");
    return -std::log(2.0 * kInvSqrt3 * x * (1.0 - 0.5 * kInvSqrt3 * c.kappa * std::sqrt(x)));
}

} // namespace crestwave
