#include "crestwave/asymptotics.hpp"
#include "crestwave/chebyshev.hpp"
#include "crestwave/coefficients.hpp"
#include "crestwave/lambda_pipeline.hpp"
#include "crestwave/spectrum.hpp"
#include "crestwave/transforms.hpp"
#include "crestwave/vorticity.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace crestwave;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTau1 = 1.8026790737666898578;
constexpr double kS0 = 0.71430231616647916443;
constexpr double kRemainder = 1.2040186106500347868;
constexpr double kKappaOracle = 0.71637995454902794637;
} // namespace

TEST(Chebyshev, DifferentiatesSmoothFunctionsSpectrally) {
    const auto g = cheb::make_grid(33, 0.5 * kPi);
    Eigen::VectorXd f(g.size()), df(g.size()), d2f(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        f(k) = std::cos(1.3 * g.z[k]);
        df(k) = -1.3 * std::sin(1.3 * g.z[k]);
        d2f(k) = -1.69 * f(k);
    }
    EXPECT_LT((g.d1 * f - df).lpNorm<Eigen::Infinity>(), 1e-12);
    EXPECT_LT((g.d2 * f - d2f).lpNorm<Eigen::Infinity>(), 1e-10);
}

TEST(Chebyshev, QuadratureAndInterpolation) {
    const auto g = cheb::make_grid(25, 0.5 * kPi);
    double s = 0.0;
    std::vector<double> f(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        f[k] = std::sin(g.z[k]);
        s += g.weights[k] * f[k];
    }
    EXPECT_NEAR(s, 1.0, 1e-14);
    EXPECT_NEAR(cheb::interpolate(g, f, 0.37), std::sin(0.37), 1e-14);
    EXPECT_EQ(g.z.front(), 0.0);
    EXPECT_EQ(g.z.back(), 0.5 * kPi);
    EXPECT_THROW(cheb::make_grid(2, 1.0), DomainError);
}

TEST(Vorticity, PolynomialEvaluation) {
    const VorticityModel m({1.0, -2.0, 3.0}, 0.4);
    EXPECT_DOUBLE_EQ(m.value(0.8), 1.0 - 1.6 + 3.0 * 0.64);
    EXPECT_DOUBLE_EQ(m.derivative(0.8), -2.0 + 6.0 * 0.8);
    EXPECT_NEAR(m.primitive(0.8), 0.8 - 0.64 + 0.512, 1e-15);
    EXPECT_DOUBLE_EQ(m.omega_at_one(), 2.0);
    EXPECT_DOUBLE_EQ(omega_hat(m, 0.2), m.value(0.8));
}

TEST(Vorticity, JsonRoundTripAndValidation) {
    const VorticityModel m({0.5, 0.25}, 0.3);
    const auto back = VorticityModel::from_json(m.to_json());
    EXPECT_EQ(back.coeffs(), m.coeffs());
    EXPECT_EQ(back.delta(), m.delta());
    EXPECT_THROW(VorticityModel::from_json({{"coeffs", {1.0}}, {"extra", 1}}), DomainError);
    EXPECT_THROW(VorticityModel::from_json({{"delta", 0.5}}), DomainError);
    EXPECT_THROW(VorticityModel({1.0}, -0.1), DomainError);
}

TEST(Vorticity, StrictPolicyGuardsTheBand) {
    const VorticityModel strict({1.0}, 0.5, ExtensionPolicy::strict);
    EXPECT_NO_THROW(strict.value(0.6));
    EXPECT_THROW(strict.value(0.2), DomainError);
    const VorticityModel loose({1.0}, 0.5);
    EXPECT_NO_THROW(loose.value(0.2));
    EXPECT_FALSE(loose.in_band(0.2));
}

TEST(Spectrum, FirstRootMatchesOracle) {
    const auto e = solve_eigenpair(1);
    EXPECT_NEAR(e.tau, kTau1, 1e-14);
    EXPECT_LT(std::abs(characteristic_residual(e)), 1e-12);
    EXPECT_NEAR(e.mu, kTau1 * kTau1, 1e-13);
    EXPECT_NEAR(remainder_exponent(), kRemainder, 1e-14);
}

TEST(Spectrum, HyperbolicModeAndOrdering) {
    const auto e0 = solve_eigenpair(0);
    EXPECT_NEAR(e0.tau, kS0, 1e-14);
    EXPECT_NEAR(e0.mu, -kS0 * kS0, 1e-14);
    double prev = 0.0;
    for (int j = 1; j <= 8; ++j) {
        const auto e = solve_eigenpair(j);
        EXPECT_GT(e.tau, 2.0 * j - 1.0);
        EXPECT_LT(e.tau, 2.0 * j);
        EXPECT_GT(e.tau, prev);
        prev = e.tau;
        // Robin condition at the surface.
        const double zt = 0.5 * kPi;
        EXPECT_NEAR(e.dphi(zt), kInvSqrt3 * e.phi(zt), 1e-12);
    }
    EXPECT_THROW(solve_eigenpair(-1), DomainError);
    EXPECT_THROW(mode_decay_rate(0, 1), DomainError);
    EXPECT_NEAR(mode_decay_rate(1, -1), -1.5 * kTau1, 1e-14);
}

TEST(Transforms, LogMapRoundTrip) {
    const CrestFrame frame;
    const auto lp = log_map(0.1, 0.8, frame);
    const auto back = log_unmap(lp.t, lp.theta, frame);
    EXPECT_NEAR(back.x, 0.1, 1e-15);
    EXPECT_NEAR(back.y, 0.8, 1e-15);
    EXPECT_THROW(log_map(0.0, 1.0, frame), DomainError);
    EXPECT_THROW(log_map(0.9, 0.1, frame), DomainError);
}

TEST(Transforms, FlattenEndpointsAreExact) {
    const double zeta = -kPi / 6.0 + 0.01;
    EXPECT_EQ(flatten(1.0, zeta, zeta).z, 0.5 * kPi);
    EXPECT_EQ(flatten(1.0, -0.5 * kPi, zeta).z, 0.0);
    const double z = 0.7;
    EXPECT_NEAR(flatten(1.0, unflatten_theta(z, zeta), zeta).z, z, 1e-15);
    EXPECT_THROW(flatten(1.0, 0.0, zeta), DomainError);
    EXPECT_THROW(flatten(1.0, -1.0, -0.5 * kPi), DomainError);
}

TEST(Transforms, SlopeRelationsInvertAndGuard) {
    const double zeta = -kPi / 6.0 + 0.02, zt = 0.13;
    const double ex = eta_x_from_zeta(zeta, zt);
    EXPECT_NEAR(zeta_t_from_eta_x(ex, zeta), zt, 1e-14);
    EXPECT_NEAR(eta_x_from_zeta(-kPi / 6.0, 0.0), -kInvSqrt3, 1e-15);
    // cos(zeta) + zeta_t sin(zeta) = 0
    EXPECT_THROW(eta_x_from_zeta(-kPi / 4.0, 1.0), SingularityError);
}

TEST(Transforms, QuadraticFormErrorIsCubic) {
    auto err = [](double s) {
        return std::abs(eta_x_from_zeta(-kPi / 6.0 + s, 0.4 * s) - eta_x_quadratic(s, 0.4 * s));
    };
    EXPECT_NEAR(err(2e-2) / err(1e-2), 8.0, 0.2);
}

TEST(Coefficients, KappaOracleAndA1Formula) {
    EXPECT_NEAR(kKappaPerOmega, kKappaOracle, 1e-15);
    EXPECT_NEAR(a1_from_lambda(5.0 * std::sqrt(3.0) / 24.0), 5.0 / 6.0, 1e-14);
    const auto c = make_coefficients(-1.0, 5.0 * std::sqrt(3.0) / 24.0, kTau1);
    EXPECT_NEAR(c.kappa, -kKappaOracle, 1e-15);
    EXPECT_NEAR(c.remainder_exp, kRemainder, 1e-14);
    EXPECT_THROW(make_coefficients(1.0, 0.0, kTau1), InvariantError);
    EXPECT_THROW(make_coefficients(1.0, 0.3, 2.5), DomainError);
}

TEST(Coefficients, SeriesAreTermwiseConsistent) {
    const auto c = make_coefficients(0.7, 0.36, kTau1);
    const double x = 0.02, h = 1e-6;
    EXPECT_NEAR((eta_series(x + h, 1.0, c) - eta_series(x - h, 1.0, c)) / (2 * h), eta_x_series(x, c), 1e-9);
    EXPECT_NEAR((eta_x_series(x + h, c) - eta_x_series(x - h, c)) / (2 * h), eta_xx_series(x, c), 1e-6);
    const auto flat = make_coefficients_unchecked(0.0, 0.36, kTau1);
    EXPECT_EQ(eta_x_series(0.3, flat), -kInvSqrt3);
    EXPECT_THROW(eta_xx_series(0.0, c), DomainError);
}

TEST(Asymptotics, ClosedFormsSolveTheLimitSystems) {
    EXPECT_LT(stokes_corner_residual(1).max(), 1e-12);
    EXPECT_LT(stokes_corner_residual(-1).max(), 1e-12);
    EXPECT_LT(verify_u_star(0.5).max(), 1e-12);
}

TEST(Asymptotics, XiSeriesDerivatives) {
    const auto c = make_coefficients_unchecked(0.5, 0.36, kTau1);
    const double q = 3.0, h = 1e-5;
    const auto v = xi_series(q, c);
    EXPECT_NEAR((xi_series(q + h, c).xi - xi_series(q - h, c).xi) / (2 * h), v.xi_q, 1e-10);
    EXPECT_NEAR((xi_series(q + h, c).xi_q - xi_series(q - h, c).xi_q) / (2 * h), v.xi_qq, 1e-10);
    EXPECT_NEAR(xi_leading(q, 0.5).xi, 0.5 / 3.0 * std::exp(-1.5), 1e-16);
}

TEST(Asymptotics, PsiSeriesVanishesOnTheSurfaceRay) {
    const CrestFrame frame;
    const auto c = make_coefficients_unchecked(0.0, 0.36, kTau1);
    const double rho = 0.1, theta = -kPi / 6.0;
    const double x = rho * std::cos(theta), y = frame.r + rho * std::sin(theta);
    EXPECT_NEAR(psi_series(x, y, frame, c), 1.0, 1e-15);
}
