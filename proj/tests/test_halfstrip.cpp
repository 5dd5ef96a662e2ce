#include "crestwave/diagnostics.hpp"
#include "crestwave/halfstrip.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace crestwave;

namespace {

constexpr double kPi = std::numbers::pi;
const double kLambda = 5.0 * std::sqrt(3.0) / 24.0;

struct Solved {
    StripField field;
    NewtonReport report;
};

// The default-grid omega1 = 0.5 solve is shared by several tests.
const Solved& solved_half() {
    static const Solved s = [] {
        Solved out;
        out.field = newton_solve(StripGrid{}, VorticityModel::constant(0.5), std::nullopt, {}, &out.report);
        return out;
    }();
    return s;
}

} // namespace

TEST(StripGrid, Validation) {
    EXPECT_NO_THROW(StripGrid{}.validate());
    EXPECT_THROW((StripGrid{5.0, 4.0, 100, 16}.validate()), DomainError);
    EXPECT_THROW((StripGrid{2.0, 14.0, 30, 16}.validate()), DomainError);
    EXPECT_THROW((StripGrid{2.0, 14.0, 100, 6}.validate()), DomainError);
    EXPECT_EQ(zspacing_from_string("uniform"), ZSpacing::uniform);
    EXPECT_THROW(zspacing_from_string("random"), DomainError);
}

TEST(ZDiscretization, ChebyshevAndUniformDerivatives) {
    for (auto sp : {ZSpacing::chebyshev, ZSpacing::uniform}) {
        const auto zd = make_z_discretization(sp == ZSpacing::chebyshev ? 32 : 401, sp);
        Eigen::VectorXd f(zd.z.size()), df(zd.z.size());
        for (std::size_t k = 0; k < zd.z.size(); ++k) {
            f(k) = std::cos(zd.z[k]);
            df(k) = -std::sin(zd.z[k]);
        }
        const double tol = sp == ZSpacing::chebyshev ? 1e-12 : 1e-4;
        EXPECT_LT((zd.d1 * f - df).lpNorm<Eigen::Infinity>(), tol) << to_string(sp);
        EXPECT_LT((zd.d2 * f + f).lpNorm<Eigen::Infinity>(), 100 * tol) << to_string(sp);
    }
}

TEST(Newton, JacobianMatchesFiniteDifferences) {
    StripGrid g{2.0, 14.0, 61, 8};
    auto p = default_problem(g, VorticityModel::constant(0.3));
    NewtonOptions opt;
    detail::StripSystem sys(p, opt);
    Eigen::VectorXd x = sys.initial_guess();
    x += 1e-3 * Eigen::VectorXd::LinSpaced(x.size(), -1.0, 1.0);
    const Eigen::MatrixXd J = Eigen::MatrixXd(sys.jacobian(x));
    Eigen::MatrixXd fd(x.size(), x.size());
    for (int k = 0; k < x.size(); ++k) {
        Eigen::VectorXd xp = x, xm = x;
        const double e = 1e-6 * std::max(1.0, std::abs(x(k)));
        xp(k) += e;
        xm(k) -= e;
        fd.col(k) = (sys.residual(xp) - sys.residual(xm)) / (2.0 * e);
    }
    const double scale = J.cwiseAbs().maxCoeff();
    EXPECT_LT((J - fd).cwiseAbs().maxCoeff() / scale, 1e-8);
}

TEST(Newton, StokesCornerIsAFixedPoint) {
    StripGrid g{2.0, 14.0, 120, 16};
    NewtonReport rep;
    const auto f = newton_solve(g, VorticityModel::constant(0.0), std::nullopt, {}, &rep);
    EXPECT_LE(rep.iterations, 1);
    for (int i = 0; i < g.nq; ++i) {
        EXPECT_NEAR(f.zeta[i], -kPi / 6.0, 1e-12);
        for (int j = 0; j < g.nz; ++j)
            EXPECT_NEAR(f.psi_bar(i, j), (2.0 / 3.0) * std::exp(-1.5 * f.q[i]) * std::cos(f.z[j]), 1e-14);
    }
}

TEST(Newton, ConvergesQuadratically) {
    const auto& rep = solved_half().report;
    EXPECT_TRUE(rep.converged);
    EXPECT_LE(rep.iterations, 8);
    ASSERT_GE(rep.residual_history.size(), 3u);
    EXPECT_LT(rep.residual_history.back(), 1e-10);
    // Order log r_{k+1} / log r_k on iterates above the round-off floor of the scaled system.
    const auto& r = rep.residual_history;
    int checked = 0;
    for (std::size_t k = 0; k + 1 < r.size(); ++k) {
        if (r[k + 1] < 1e-9) break;
        EXPECT_GT(std::log(r[k + 1]) / std::log(r[k]), 1.6) << "iteration " << k + 1;
        ++checked;
    }
    EXPECT_GE(checked, 2);
    for (double t : rep.step_history) EXPECT_EQ(t, 1.0);
}

TEST(Newton, ReportsNonConvergenceWithHistory) {
    NewtonOptions opt;
    opt.max_iter = 1;
    opt.tol = 1e-30;
    try {
        newton_solve(StripGrid{2.0, 14.0, 60, 12}, VorticityModel::constant(0.5), std::nullopt, opt);
        FAIL() << "expected ConvergenceError";
    } catch (const ConvergenceError& e) {
        EXPECT_EQ(e.residual_history.size(), 2u);
        EXPECT_EQ(e.step_history.size(), 1u);
        EXPECT_GT(e.last_residual(), 0.0);
    }
}

TEST(Newton, LeadingXiRateAndSecondCoefficient) {
    const auto& f = solved_half().field;
    const auto [lo, hi] = middle_third(f.grid.q0, f.grid.Q);
    const auto xi = f.xi();
    const auto fit = fit_decay(f.q, xi, lo, hi);
    EXPECT_NEAR(fit.rate, 0.5, 0.02);
    const auto sc = fit_second_coefficient(f.q, xi, 0.5, lo, hi);
    EXPECT_NEAR(sc.value / (kLambda * 0.25), 1.0, 0.10);
}

TEST(Newton, FieldInvariants) {
    const auto& f = solved_half().field;
    for (int i = 0; i < f.grid.nq; ++i) {
        EXPECT_GT(f.zeta[i], -0.5 * kPi);
        EXPECT_LT(f.zeta[i], 0.0);
        for (int j = 0; j + 1 < f.grid.nz; ++j) ASSERT_GT(f.psi_bar(i, j), 0.0) << i << "," << j;
    }
}

TEST(Newton, EquationsHoldOnSolvedLines) {
    const auto& f = solved_half().field;
    const auto r = assemble_residual(f);
    EXPECT_FALSE(r.domain_extended);
    for (int i = 1; i + 1 < f.grid.nq; ++i) {
        // Scaled Bernoulli below 1e-9 means the unscaled defect is below 1e-9 e^{-3q}.
        EXPECT_LT(std::abs(r.bernoulli[i]), 1e-9 * std::exp(-3.0 * f.q[i])) << "q = " << f.q[i];
        EXPECT_LT(std::abs(r.bottom[i]), 1e-11);
    }
    EXPECT_LT(r.solved_max(), 1e-10);
}

TEST(Newton, RefinementConvergesAtSecondOrder) {
    // q-lines aligned so that q = 8 is a node on every level.
    double xi8[3];
    const int nq[3] = {121, 241, 481}, nz[3] = {16, 32, 64};
    for (int k = 0; k < 3; ++k) {
        StripGrid g;
        g.nq = nq[k];
        g.nz = nz[k];
        const auto f = newton_solve(g, VorticityModel::constant(0.5));
        const int i8 = static_cast<int>(std::lround((8.0 - g.q0) / g.h()));
        ASSERT_NEAR(f.q[i8], 8.0, 1e-12);
        xi8[k] = f.xi()[i8];
    }
    const double d1 = std::abs(xi8[1] - xi8[0]), d2 = std::abs(xi8[2] - xi8[1]);
    EXPECT_GT(d1 / d2, 3.0);
}

TEST(Newton, LambdaFreeReferenceGivesTheSameSecondCoefficient) {
    // The reference data carry no lambda; the solver must generate it.
    NewtonOptions opt;
    opt.composite.profile = false;
    opt.composite.xi_second = false;
    const auto f = newton_solve(StripGrid{}, VorticityModel::constant(0.5), std::nullopt, opt);
    const auto [lo, hi] = middle_third(f.grid.q0, f.grid.Q);
    const auto sc = fit_second_coefficient(f.q, f.xi(), 0.5, lo, hi);
    EXPECT_NEAR(sc.value / (kLambda * 0.25), 1.0, 0.05);
}

TEST(Field, JsonRoundTrip) {
    const auto& f = solved_half().field;
    const auto back = field_from_json(nlohmann::json::parse(f.to_json().dump()));
    EXPECT_EQ(back.grid.nq, f.grid.nq);
    EXPECT_EQ(back.grid.spacing, f.grid.spacing);
    EXPECT_LT((back.psi_bar - f.psi_bar).cwiseAbs().maxCoeff(), 1e-12);
    for (int i = 0; i < f.grid.nq; ++i) EXPECT_NEAR(back.zeta[i], f.zeta[i], 1e-12);
    EXPECT_EQ(back.omega.coeffs(), f.omega.coeffs());
    EXPECT_EQ(back.residual, f.residual);
    auto bad = f.to_json();
    bad["zeta"] = std::vector<double>{0.0};
    EXPECT_THROW(field_from_json(bad), DomainError);
    EXPECT_THROW(field_from_json(nlohmann::json::object()), DomainError);
}

TEST(Composite, ClosureCarriesTheTwoTermXi) {
    const ReducedProfile profile;
    const auto c = make_coefficients_unchecked(0.5, profile.lambda(), solve_eigenpair(1).tau);
    const auto z = make_z_discretization(16, ZSpacing::chebyshev).z;
    const double Q = 14.0;
    const auto line = far_field_closure(c, Q, z, &profile);
    EXPECT_NEAR(line.zeta, -kPi / 6.0 + xi_series(Q, c).xi, 1e-15);
    EXPECT_NEAR(line.psi_bar.front(), (2.0 / 3.0) * std::exp(-1.5 * Q) + u_star({Q, 0.0}, 0.5) +
                                          0.25 * profile(0.0) * std::exp(-2.5 * Q),
                1e-18);
    EXPECT_NEAR(profile(0.5 * kPi), kLambda, 1e-12);
}

TEST(Composite, ResidualDecaysAtFiveHalves) {
    const ReducedProfile profile;
    const auto c = make_coefficients_unchecked(0.5, profile.lambda(), solve_eigenpair(1).tau);
    CompositeOptions opt;
    opt.profile = false;
    const auto f = composite_field(StripGrid{}, c, &profile, opt);
    const auto r = assemble_residual(f);
    std::vector<double> q, v;
    for (int i = 0; i < f.grid.nq; ++i)
        if (f.q[i] >= 5.0 && f.q[i] <= 12.0) {
            q.push_back(f.q[i]);
            v.push_back(r.line_max(i));
        }
    EXPECT_NEAR(fit_decay(q, v).rate, 2.5, 0.05);
}

TEST(Surface, ExtractionIsOrderedAndInRange) {
    const auto& f = solved_half().field;
    const auto s = extract_surface(f);
    ASSERT_EQ(s.x.size(), 241u);
    for (std::size_t k = 1; k < s.x.size(); ++k) EXPECT_GT(s.x[k], s.x[k - 1]);
    EXPECT_NEAR(s.x.front(), std::exp(-f.q.back()) * std::cos(f.zeta.back()), 1e-12);
    // Positive vorticity steepens the slope away from the Stokes value.
    for (double e : s.eta_x) {
        EXPECT_GT(e, -kInvSqrt3);
        EXPECT_LT(e, -kInvSqrt3 + 0.2);
    }
}
