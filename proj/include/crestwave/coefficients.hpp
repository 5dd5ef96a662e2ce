#pragma once

#include "crestwave/error.hpp"
#include "crestwave/spectrum.hpp"

#include <cmath>
#include <string>

namespace crestwave {

// 2^{3/2} / 3^{5/4}: kappa per unit omega(1).
inline const double kKappaPerOmega = std::pow(2.0, 1.5) / std::pow(3.0, 1.25);

struct ExpansionCoefficients {
    double omega1 = 0.0;
    double kappa = 0.0;
    double lambda = 0.0;
    double a1 = 0.0;
    double tau1 = 0.0;
    double remainder_exp = 0.0;
};

// a1 = -(1/18 + (2/sqrt3)(sqrt3 - 24 lambda)/9)
inline double a1_from_lambda(double lambda) {
    const double s3 = std::sqrt(3.0);
    return -(1.0 / 18.0 + (2.0 / s3) * (s3 - 24.0 * lambda) / 9.0);
}

// Builds the record without the positivity check; used to report failing values.
inline ExpansionCoefficients make_coefficients_unchecked(double omega1, double lambda, double tau1) {
    ExpansionCoefficients c;
    c.omega1 = omega1;
    c.kappa = kKappaPerOmega * omega1;
    c.lambda = lambda;
    c.a1 = a1_from_lambda(lambda);
    c.tau1 = tau1;
    c.remainder_exp = remainder_exponent(tau1);
    return c;
}

inline ExpansionCoefficients make_coefficients(double omega1, double lambda, double tau1) {
    if (!std::isfinite(lambda)) throw DomainError("coefficients: lambda must be finite");
    if (!(tau1 > 1.0 && tau1 < 2.0)) throw DomainError("coefficients: tau1 must lie in (1, 2)");
    auto c = make_coefficients_unchecked(omega1, lambda, tau1);
    if (!(c.a1 > 0.0))
        throw InvariantError("coefficients: a1 = " + std::to_string(c.a1) + " is not positive");
    return c;
}

// eta_x = -1/sqrt3 + kappa sqrt(x) + a1 omega1^2 x
inline double eta_x_series(double x, const ExpansionCoefficients& c) {
    if (x < 0.0) throw DomainError("eta_x_series: x must be non-negative");
    return -kInvSqrt3 + c.kappa * std::sqrt(x) + c.a1 * c.omega1 * c.omega1 * x;
}

// Term-wise x-derivative; diverges like kappa / (2 sqrt(x)) at the crest.
inline double eta_xx_series(double x, const ExpansionCoefficients& c) {
    if (!(x > 0.0)) throw DomainError("eta_xx_series: x must be positive");
    return 0.5 * c.kappa / std::sqrt(x) + c.a1 * c.omega1 * c.omega1;
}

// Term-wise integral with eta(0) = r.
inline double eta_series(double x, double r, const ExpansionCoefficients& c) {
    if (x < 0.0) throw DomainError("eta_series: x must be non-negative");
    return r - kInvSqrt3 * x + (2.0 / 3.0) * c.kappa * x * std::sqrt(x) + 0.5 * c.a1 * c.omega1 * c.omega1 * x * x;
}

} // namespace crestwave
