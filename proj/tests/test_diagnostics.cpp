#include "crestwave/diagnostics.hpp"
#include "crestwave/halfstrip.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace crestwave;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(n);
    for (int k = 0; k < n; ++k) v[k] = a + (b - a) * k / (n - 1);
    return v;
}

std::vector<double> logspace(double a, double b, int n) {
    auto v = linspace(std::log(a), std::log(b), n);
    for (double& x : v) x = std::exp(x);
    return v;
}

} // namespace

TEST(FitDecay, ExactExponential) {
    const auto q = linspace(2.0, 10.0, 40);
    std::vector<double> v;
    for (double x : q) v.push_back(-0.3 * std::exp(-0.7 * x));
    const auto f = fit_decay(q, v);
    EXPECT_NEAR(f.rate, 0.7, 1e-12);
    EXPECT_NEAR(f.amplitude, -0.3, 1e-12);
    EXPECT_LT(f.rms_residual, 1e-12);
    EXPECT_EQ(f.samples, 40);
}

TEST(FitDecay, DominantTermOfAMixture) {
    const auto q = linspace(6.0, 10.0, 80);
    std::vector<double> v;
    for (double x : q) v.push_back(std::exp(-0.5 * x) + 0.2 * std::exp(-x));
    EXPECT_NEAR(fit_decay(q, v).rate, 0.5, 0.02 * 0.5);
}

TEST(FitDecay, WindowAndErrors) {
    const auto q = linspace(0.0, 20.0, 201);
    std::vector<double> v;
    for (double x : q) v.push_back(std::exp(-x));
    const auto f = fit_decay(q, v, 5.0, 10.0);
    EXPECT_NEAR(f.q_lo, 5.0, 1e-12);
    EXPECT_NEAR(f.q_hi, 10.0, 1e-12);
    EXPECT_EQ(f.samples, 51);
    v[100] = -v[100];
    EXPECT_THROW(fit_decay(q, v), SignChangeError);
    EXPECT_THROW(fit_decay(linspace(0, 1, 5), std::vector<double>(5, 1.0)), DomainError);
    EXPECT_THROW(fit_decay(q, v, 5.0, 5.2), DomainError);
    const auto mt = middle_third(2.0, 14.0);
    EXPECT_DOUBLE_EQ(mt.first, 6.0);
    EXPECT_DOUBLE_EQ(mt.second, 10.0);
}

TEST(SecondCoefficient, RecoversTheSeriesWithRemainder) {
    const auto q = linspace(6.0, 10.0, 161);
    const double w = 0.5, lam = 0.36, rem = remainder_exponent();
    std::vector<double> xi;
    for (double x : q) xi.push_back(w / 3.0 * std::exp(-0.5 * x) + lam * w * w * std::exp(-x) + 0.05 * std::exp(-rem * x));
    const auto f = fit_second_coefficient(q, xi, w, 6.0, 10.0);
    EXPECT_NEAR(f.value, lam * w * w, 1e-9);
    EXPECT_NEAR(f.remainder_amp, 0.05, 1e-7);
}

TEST(SurfaceCoeffs, RecoversSyntheticCoefficients) {
    const double kappa = 0.358, a = 0.2, rem = 0.7, p = remainder_exponent();
    const auto x = logspace(1e-6, 1e-3, 60);
    std::vector<double> ex;
    for (double xx : x) ex.push_back(-kInvSqrt3 + kappa * std::sqrt(xx) + a * xx);
    auto f = extract_surface_coeffs(x, ex);
    EXPECT_NEAR(f.kappa_hat, kappa, 1e-8);
    EXPECT_NEAR(f.a1_hat, a, 1e-5);
    for (std::size_t k = 0; k < x.size(); ++k) ex[k] += rem * std::pow(x[k], p);
    f = extract_surface_coeffs(x, ex);
    EXPECT_NEAR(f.kappa_hat, kappa, 1e-3);
    EXPECT_NEAR(f.remainder_coeff, rem, 1e-3 * rem + 1e-6);
}

TEST(SurfaceCoeffs, RescalingXRescalesTheCoefficients) {
    const double kappa = 0.358, a = 0.2, s = 10.0;
    const auto x = logspace(1e-6, 1e-3, 60);
    std::vector<double> ex, xs;
    for (double xx : x) {
        ex.push_back(-kInvSqrt3 + kappa * std::sqrt(xx) + a * xx + 0.3 * std::pow(xx, remainder_exponent()));
        xs.push_back(s * xx);
    }
    const auto f = extract_surface_coeffs(x, ex), g = extract_surface_coeffs(xs, ex);
    EXPECT_NEAR(g.kappa_hat, f.kappa_hat / std::sqrt(s), 1e-8);
    EXPECT_NEAR(g.a1_hat, f.a1_hat / s, 1e-6);
    EXPECT_NEAR(g.rms, f.rms, 1e-14);
}

TEST(SurfaceCoeffs, InputChecks) {
    std::vector<double> x(5, 1.0), e(5, 0.0);
    EXPECT_THROW(extract_surface_coeffs(x, e), DomainError);
    const auto xx = logspace(1e-6, 1e-3, 20);
    std::vector<double> ex(20, 0.0);
    auto bad = xx;
    bad[3] = -1.0;
    EXPECT_THROW(extract_surface_coeffs(bad, ex), DomainError);
    EXPECT_THROW(extract_surface_coeffs(xx, std::vector<double>(19, 0.0)), DomainError);
}

TEST(LeastSquares, RejectsRankDeficientBasis) {
    Eigen::MatrixXd a(10, 2);
    Eigen::VectorXd b = Eigen::VectorXd::Ones(10);
    for (int k = 0; k < 10; ++k) a(k, 0) = a(k, 1) = k + 1.0;
    EXPECT_THROW(least_squares(a, b), RankError);
}

TEST(Holder, SingleRayOnTheCornerIsConstant) {
    const ReducedProfile profile;
    const auto c = make_coefficients_unchecked(0.0, profile.lambda(), solve_eigenpair(1).tau);
    const auto f = composite_field(StripGrid{2.0, 14.0, 241, 24}, c, &profile);
    HolderOptions opt;
    opt.rays = {-kPi / 3.0};
    const auto h = holder_scan(f, opt);
    EXPECT_NEAR(h.ratio, 1.0, 1e-9);
    EXPECT_GT(h.c1, 0.0);
}

TEST(Holder, CornerOracleOnThreeRays) {
    const ReducedProfile profile;
    const auto c = make_coefficients_unchecked(0.0, profile.lambda(), solve_eigenpair(1).tau);
    const auto f = composite_field(StripGrid{2.0, 14.0, 241, 24}, c, &profile);
    const auto h = holder_scan(f);
    // Extremes of sin(3(theta + pi/2)/2 ...) over the three rays: 1 / sin(-pi/8 + 3 pi/4).
    EXPECT_NEAR(h.ratio, 1.0 / std::sin(-kPi / 8.0 + 0.75 * kPi), 1e-8);
    EXPECT_EQ(h.samples, 3 * (241 - 2));
    EXPECT_THROW(holder_scan(f, HolderOptions{{-kPi / 3.0}, 20.0, 21.0}), DomainError);
}

TEST(Concavity, ClassifiesSimpleCurves) {
    const auto x = linspace(0.01, 1.0, 50);
    std::vector<double> down, up, flat(50, -kInvSqrt3);
    for (double xx : x) {
        down.push_back(-std::sqrt(xx));
        up.push_back(xx * xx);
    }
    EXPECT_EQ(concavity_check(x, down).status, Concavity::concave);
    EXPECT_EQ(concavity_check(x, up).status, Concavity::not_concave);
    EXPECT_NEAR(*concavity_check(x, up).first_violation, x[1], 1e-15);
    EXPECT_EQ(concavity_check(x, flat).status, Concavity::indeterminate);
    EXPECT_FALSE(concavity_check(x, flat).first_violation.has_value());
    EXPECT_STREQ(to_string(Concavity::indeterminate), "indeterminate");
    EXPECT_THROW(concavity_check({1.0, 1.0, 2.0}, {0.0, 0.0, 0.0}), DomainError);
}

TEST(Concavity, SeriesSignFollowsVorticity) {
    const double lam = 5.0 * std::sqrt(3.0) / 24.0, tau1 = solve_eigenpair(1).tau;
    for (double w : {-1.0, 1.0}) {
        const auto c = make_coefficients_unchecked(w, lam, tau1);
        const double x0 = std::pow(c.kappa / (2.0 * c.a1 * w * w), 2);
        const auto x = logspace(1e-8, 0.9 * x0, 100);
        std::vector<double> ex;
        for (double xx : x) ex.push_back(eta_x_series(xx, c));
        EXPECT_EQ(concavity_check(x, ex).status, w < 0 ? Concavity::concave : Concavity::not_concave);
    }
}
