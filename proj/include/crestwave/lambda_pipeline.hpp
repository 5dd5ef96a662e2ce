#pragma once

#include "crestwave/chebyshev.hpp"
#include "crestwave/coefficients.hpp"
#include "crestwave/error.hpp"
#include "crestwave/spectrum.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

namespace crestwave {

enum class TermStatus { kept, consumed_by_u_star, dropped_higher_order };

inline const char* to_string(TermStatus s) {
    switch (s) {
    case TermStatus::kept: return "kept";
    case TermStatus::consumed_by_u_star: return "consumed by U*";
    case TermStatus::dropped_higher_order: return "dropped: higher order";
    }
    return "?";
}

struct ProvenanceEntry {
    std::string tag;     // e.g. "N1:xi*Psi"
    std::string source;  // N1, N2 or N3
    double order = 0.0;  // q-exponent of the term
    TermStatus status = TermStatus::kept;
};

struct ReducedBVP {
    double order = 2.5;
    double omega1 = 0.0;
    std::function<double(double)> f1;       // coefficient of e^{-sigma q} in N1
    std::function<double(double)> f2;       // coefficient of e^{-sigma q} in N2
    std::function<double(double)> forcing;  // right-hand side of d'' + (4/9) sigma^2 d
    double robin_data = 0.0;                // d'(pi/2) - d(pi/2)/sqrt3
    double bottom_data = 0.0;               // d'(0)
    std::vector<ProvenanceEntry> provenance;
};

struct LambdaResult {
    double lambda = 0.0;
    double d_top = 0.0;  // d(pi/2) = lambda omega1^2
    std::vector<double> z;
    std::vector<double> profile;
    double residual_norm = 0.0;  // normwise backward error of the discrete system
    double condition_estimate = 0.0;
    int nodes = 0;
    std::string method;
};

namespace detail {

// One factor of a product term: per-unit profile, q-order and power of omega1 it carries.
struct Factor {
    std::string name;
    double order = 0.0;
    int omega_power = 0;
    std::function<double(double)> value;
};

struct Term {
    std::string tag;
    std::string source;
    double constant = 1.0;
    std::vector<Factor> factors;
    bool has_denominator = false;  // carries 1/(pi + 3 xi)

    double order() const {
        double s = 0.0;
        for (const auto& f : factors) s += f.order;
        return s;
    }
    double eval(double z, double omega1) const {
        double v = constant;
        for (const auto& f : factors) v *= f.value(z) * std::pow(omega1, f.omega_power);
        return v;
    }
    bool contains(const std::string& prefix) const {
        for (const auto& f : factors)
            if (f.name.rfind(prefix, 0) == 0) return true;
        return false;
    }
};

struct ForcingTables {
    std::vector<Term> n1, n2, n3;
    std::vector<ProvenanceEntry> extra;  // terms recorded without a profile
};

inline ForcingTables forcing_tables() {
    const double pi = std::numbers::pi;
    const double top = 0.5 * pi;
    const auto c = [](double v) { return [v](double) { return v; }; };

    // Substituted quantities: xi~ = (omega1/3) E, xi~_q = -(omega1/6) E with E = e^{-q/2}.
    const Factor xi{"xi", 0.5, 1, c(1.0 / 3.0)};
    const Factor xi_q{"xi_q", 0.5, 1, c(-1.0 / 6.0)};
    const auto u = [](double z) { return (3.0 - 2.0 * std::cos(4.0 * z / 3.0)) / 12.0; };
    const auto u_z = [](double z) { return (2.0 / 9.0) * std::sin(4.0 * z / 3.0); };
    const auto u_zz = [](double z) { return (8.0 / 27.0) * std::cos(4.0 * z / 3.0); };
    const Factor ustar_z{"U*_z", 2.0, 1, u_z};
    const Factor ustar_zz{"U*_zz", 2.0, 1, u_zz};
    const Factor vstar{"V*", 2.0, 1, [u](double z) { return -(4.0 / 3.0) * u(z); }};
    const Factor zvstar_z{"(zV*)_z", 2.0, 1, [u, u_z](double z) { return -(4.0 / 3.0) * (u(z) + z * u_z(z)); }};
    // Corner profile (2/3) cos z with e^{-3q/2}.
    const Factor ubar{"Ubar", 1.5, 0, [](double z) { return (2.0 / 3.0) * std::cos(z); }};
    const Factor ubar_z{"Ubar_z", 1.5, 0, [](double z) { return -(2.0 / 3.0) * std::sin(z); }};
    const Factor ubar_zubar_z{"Ubar+zUbar_z", 1.5, 0,
                              [](double z) { return (2.0 / 3.0) * (std::cos(z) - z * std::sin(z)); }};
    const Factor zubar_zz{"(zUbar)_zz", 1.5, 0,
                          [](double z) { return (2.0 / 3.0) * (-2.0 * std::sin(z) - z * std::cos(z)); }};
    const Factor zf{"z", 0.0, 0, [](double z) { return z; }};
    const Factor exp2{"e^{-2q}", 2.0, 0, c(1.0)};
    const Factor omega{"omega1", 0.0, 1, c(1.0)};
    // Surface values at z = pi/2 and the e^{+-3q/2} scalings of the Bernoulli remainder.
    const Factor vstar_top{"V*|top", 2.0, 1, c(-(4.0 / 3.0) * u(top))};
    const Factor ustar_z_top{"U*_z|top", 2.0, 1, c(u_z(top))};
    const Factor grow{"e^{3q/2}", -1.5, 0, c(1.0)};
    const Factor decay{"e^{-3q/2}", 1.5, 0, c(1.0)};

    // Linear-in-xi coefficients of Psi_hat and psi_bar_z at the surface (per e^{-3q/2}).
    const double k_psihat = -(3.0 / pi) * (2.0 / 3.0) * (std::cos(top) - top * std::sin(top));
    const double k_psiz = (3.0 / pi) * (2.0 / 3.0) * (-std::sin(top) - top * std::cos(top));
    // xi^2 coefficient of (1 + 3xi/pi)^2 sin(-pi/6 + xi).
    const double g2 = 0.25 + 3.0 * std::sqrt(3.0) / pi - 4.5 / (pi * pi);

    ForcingTables t;
    t.n1 = {
        {"N1:xi*Psi", "N1", -4.5 / pi, {xi, vstar}, true},
        {"N1:z*Ubar_z*xi^2", "N1", 13.5 / (pi * pi), {zf, ubar_z, xi, xi}, true},
        {"N1:z^2*Ubar*xi*xi_q", "N1", -9.0 / (pi * pi), {zf, zf, ubar, xi, xi_q}, true},
        {"N1:z*Phi_z*xi_q", "N1", 3.0 / pi, {zf, ustar_z, xi_q}, true},
    };
    t.n2 = {
        {"N2:f:omega1", "N2", 2.0 / 3.0, {omega, exp2}, false},
        {"N2:f:omega1*xi", "N2", 2.0 / pi, {omega, xi, exp2}, false},
        {"N2:(Ubar+zUbar_z)*xi^2", "N2", -13.5 / (pi * pi), {ubar_zubar_z, xi, xi}, true},
        {"N2:xi_q*(zPsi)_z", "N2", 3.0 / pi, {xi_q, zvstar_z}, true},
        {"N2:z*(zUbar)_zz*xi*xi_q", "N2", -9.0 / (pi * pi), {zf, zubar_zz, xi, xi_q}, true},
        {"N2:Phi_zz*xi", "N2", 4.5 / pi, {ustar_zz, xi}, true},
    };
    t.n3 = {
        {"N3:Psi^2", "N3", 0.75, {grow, vstar_top, vstar_top}, false},
        {"N3:xi*Psi", "N3", 0.75 * 2.0 * k_psihat, {xi, vstar_top}, false},
        {"N3:xi^2:Psi_hat", "N3", 0.75 * k_psihat * k_psihat, {decay, xi, xi}, false},
        {"N3:Phi_z^2", "N3", 0.75, {grow, ustar_z_top, ustar_z_top}, false},
        {"N3:xi*Phi_z", "N3", 0.75 * 2.0 * k_psiz, {xi, ustar_z_top}, false},
        {"N3:xi^2:psi_bar_z", "N3", 0.75 * k_psiz * k_psiz, {decay, xi, xi}, false},
        {"N3:xi^2:gravity", "N3", 0.75 * (8.0 / 9.0) * g2, {decay, xi, xi}, false},
    };
    // omega_hat(psi_bar) - omega_hat(0) ~ -omega'(1) Ubar: order 3/2 + 2 beyond the U* source.
    t.extra.push_back({"N2:f:omega_prime_taylor", "N2", 1.5 + 2.0, TermStatus::dropped_higher_order});
    t.extra.push_back({"N3:xi^3:gravity", "N3", 1.5 + 1.5, TermStatus::dropped_higher_order});
    return t;
}

} // namespace detail

// Substitutes U*, V*, xi~ into N1, N2, N3 and keeps the e^{-5q/2} coefficients.
inline ReducedBVP assemble_reduced_forcing(double omega1) {
    if (!std::isfinite(omega1)) throw DomainError("lambda_pipeline: omega1 must be finite");
    constexpr double sigma = 2.5;
    constexpr double tol = 1e-12;
    const auto tables = detail::forcing_tables();

    ReducedBVP bvp;
    bvp.order = sigma;
    bvp.omega1 = omega1;

    auto classify = [&](const detail::Term& term) {
        const double ord = term.order();
        if (std::abs(ord - sigma) < tol) return TermStatus::kept;
        if (ord < sigma - tol && std::abs(ord - 2.0) < tol) return TermStatus::consumed_by_u_star;
        if (ord > sigma + tol) return TermStatus::dropped_higher_order;
        throw InvariantError("lambda_pipeline: term " + term.tag + " below the reduced order is not absorbed");
    };

    auto collect = [&](const std::vector<detail::Term>& terms) {
        std::vector<detail::Term> kept;
        for (const auto& term : terms) {
            const TermStatus st = classify(term);
            bvp.provenance.push_back({term.tag, term.source, term.order(), st});
            if (st == TermStatus::kept) kept.push_back(term);
            // Corrections of kept terms enter half an order later.
            if (st != TermStatus::kept) continue;
            const double next = term.order() + 0.5;
            if (term.has_denominator)
                bvp.provenance.push_back({term.tag + ":denominator", term.source, next, TermStatus::dropped_higher_order});
            if (term.contains("xi"))
                bvp.provenance.push_back({term.tag + ":xi_second_term", term.source, next, TermStatus::dropped_higher_order});
            if (term.contains("U*") || term.contains("V*") || term.contains("(zV*)"))
                bvp.provenance.push_back({term.tag + ":Phi_tilde", term.source, next, TermStatus::dropped_higher_order});
        }
        return kept;
    };

    const auto k1 = collect(tables.n1);
    const auto k2 = collect(tables.n2);
    const auto k3 = collect(tables.n3);
    for (const auto& e : tables.extra) bvp.provenance.push_back(e);

    bvp.f1 = [k1, omega1](double z) {
        double s = 0.0;
        for (const auto& t : k1) s += t.eval(z, omega1);
        return s;
    };
    bvp.f2 = [k2, omega1](double z) {
        double s = 0.0;
        for (const auto& t : k2) s += t.eval(z, omega1);
        return s;
    };
    const auto f1 = bvp.f1, f2 = bvp.f2;
    bvp.forcing = [f1, f2](double z) { return (2.0 / 3.0) * f2(z) - (4.0 / 9.0) * sigma * f1(z); };
    double robin = 0.0;
    for (const auto& t : k3) robin += t.eval(0.5 * std::numbers::pi, omega1);
    bvp.robin_data = robin;
    bvp.bottom_data = 0.0;
    return bvp;
}

enum class BvpMethod { chebyshev, fd4 };

// Normwise backward error |Md - b| / (|M| |d| + |b|) in the max norm.
inline double backward_error(double resid, double mnorm, const Eigen::VectorXd& d, const Eigen::VectorXd& b) {
    const double scale = mnorm * d.lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>();
    return scale > 0.0 ? resid / scale : resid;
}

struct BvpOptions {
    int nodes = 64;
    BvpMethod method = BvpMethod::chebyshev;
};

// Guards the solvability margin: (2/3) sigma must avoid every tau_j.
inline void check_solvability(double sigma) {
    const double tau1 = solve_eigenpair(1).tau;
    if (!(sigma < 1.5 * tau1))
        throw InvariantError("lambda_pipeline: order " + std::to_string(sigma) + " is not below (3/2) tau_1");
    for (int j = 1; j <= 10; ++j)
        if (std::abs(sigma - 1.5 * solve_eigenpair(j).tau) < 1e-8)
            throw InvariantError("lambda_pipeline: order collides with a kernel exponent");
}

inline LambdaResult solve_reduced_bvp(const ReducedBVP& bvp, const BvpOptions& opt = {}) {
    check_solvability(bvp.order);
    if (opt.nodes < 8) throw DomainError("lambda_pipeline: need at least 8 nodes");
    const double k2 = (4.0 / 9.0) * bvp.order * bvp.order;
    const double half_pi = 0.5 * std::numbers::pi;
    const int n = opt.nodes - 1;
    LambdaResult res;
    res.nodes = opt.nodes;

    if (opt.method == BvpMethod::chebyshev) {
        res.method = "chebyshev";
        const auto g = cheb::make_grid(static_cast<std::size_t>(opt.nodes), half_pi);
        Eigen::MatrixXd m = g.d2;
        m.diagonal().array() += k2;
        Eigen::VectorXd b(opt.nodes);
        for (int i = 1; i < n; ++i) b(i) = bvp.forcing(g.z[i]);
        m.row(0) = g.d1.row(0);
        b(0) = bvp.bottom_data;
        m.row(n) = g.d1.row(n);
        m(n, n) -= kInvSqrt3;
        b(n) = bvp.robin_data;
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
        res.condition_estimate = 1.0 / lu.rcond();
        Eigen::VectorXd d = lu.solve(b);
        d += lu.solve(b - m * d);
        res.residual_norm = backward_error((m * d - b).lpNorm<Eigen::Infinity>(),
                                           m.cwiseAbs().rowwise().sum().maxCoeff(), d, b);
        res.z = g.z;
        res.profile.assign(d.data(), d.data() + d.size());
    } else {
        res.method = "fd4";
        const double h = half_pi / n;
        std::vector<Eigen::Triplet<double>> trip;
        Eigen::VectorXd b(opt.nodes);
        const double ih2 = 1.0 / (12.0 * h * h), ih = 1.0 / (12.0 * h);
        auto row = [&](int i, std::initializer_list<std::pair<int, double>> cols, double scale) {
            for (auto [j, v] : cols) trip.emplace_back(i, j, v * scale);
        };
        row(0, {{0, -25}, {1, 48}, {2, -36}, {3, 16}, {4, -3}}, ih);
        b(0) = bvp.bottom_data;
        for (int i = 1; i < n; ++i) {
            const double zi = i * h;
            b(i) = bvp.forcing(zi);
            trip.emplace_back(i, i, k2);
            if (i == 1)
                row(i, {{0, 10}, {1, -15}, {2, -4}, {3, 14}, {4, -6}, {5, 1}}, ih2);
            else if (i == n - 1)
                row(i, {{n, 10}, {n - 1, -15}, {n - 2, -4}, {n - 3, 14}, {n - 4, -6}, {n - 5, 1}}, ih2);
            else
                row(i, {{i - 2, -1}, {i - 1, 16}, {i, -30}, {i + 1, 16}, {i + 2, -1}}, ih2);
        }
        row(n, {{n, 25}, {n - 1, -48}, {n - 2, 36}, {n - 3, -16}, {n - 4, 3}}, ih);
        trip.emplace_back(n, n, -kInvSqrt3);
        b(n) = bvp.robin_data;
        Eigen::SparseMatrix<double> m(opt.nodes, opt.nodes);
        m.setFromTriplets(trip.begin(), trip.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(m);
        if (lu.info() != Eigen::Success) throw RankError("lambda_pipeline: singular finite-difference system");
        const Eigen::VectorXd d = lu.solve(b);
        double mnorm = 0.0;
        {
            Eigen::VectorXd rowsum = Eigen::VectorXd::Zero(opt.nodes);
            for (int k = 0; k < m.outerSize(); ++k)
                for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) rowsum(it.row()) += std::abs(it.value());
            mnorm = rowsum.maxCoeff();
        }
        res.residual_norm = backward_error((m * d - b).lpNorm<Eigen::Infinity>(), mnorm, d, b);
        res.condition_estimate = std::nan("");
        res.z.resize(opt.nodes);
        for (int i = 0; i <= n; ++i) res.z[i] = i * h;
        res.profile.assign(d.data(), d.data() + d.size());
    }
    res.d_top = res.profile.back();
    res.lambda = bvp.omega1 != 0.0 ? res.d_top / (bvp.omega1 * bvp.omega1) : 0.0;
    return res;
}

// lambda from the unit-omega problem.
inline LambdaResult compute_lambda(const BvpOptions& opt = {}) {
    return solve_reduced_bvp(assemble_reduced_forcing(1.0), opt);
}

struct UStarReport {
    double interior = 0.0;     // max |U*_q - (3/2)V*| and |V*_q + (3/2)U*_zz - (2/3) omega1 e^{-2q}|
    double bottom = 0.0;       // max |U*_z(q, 0)|
    double robin = 0.0;        // max |U*_z - U*/sqrt3| at z = pi/2
    double forcing_norm = 0.0; // max (2/3)|omega1| e^{-2q}
    double max() const { return std::max({interior, bottom, robin}); }
};

// Residual of (U*, V*) in the forced model system; forcing_scale != 1 perturbs the source.
inline UStarReport verify_u_star(double omega1 = 1.0, int n = 101, double qmax = 10.0, double forcing_scale = 1.0) {
    UStarReport r;
    const double half_pi = 0.5 * std::numbers::pi;
    for (int i = 0; i < n; ++i) {
        const double q = qmax * i / (n - 1);
        const double f = (2.0 / 3.0) * omega1 * std::exp(-2.0 * q);
        r.forcing_norm = std::max(r.forcing_norm, std::abs(f));
        for (int j = 0; j < n; ++j) {
            const double z = half_pi * j / (n - 1);
            const double e = omega1 / 12.0 * std::exp(-2.0 * q);
            const double us = e * (3.0 - 2.0 * std::cos(4.0 * z / 3.0));
            const double us_q = -2.0 * us;
            const double us_zz = e * (32.0 / 9.0) * std::cos(4.0 * z / 3.0);
            const double vs = -(4.0 / 3.0) * us;
            const double vs_q = -(4.0 / 3.0) * us_q;
            r.interior = std::max(r.interior, std::abs(us_q - 1.5 * vs));
            r.interior = std::max(r.interior, std::abs(vs_q + 1.5 * us_zz - forcing_scale * f));
        }
        const double e = omega1 / 12.0 * std::exp(-2.0 * q);
        r.bottom = std::max(r.bottom, std::abs(e * (8.0 / 3.0) * std::sin(0.0)));
        const double top_val = e * (3.0 - 2.0 * std::cos(4.0 * half_pi / 3.0));
        const double top_z = e * (8.0 / 3.0) * std::sin(4.0 * half_pi / 3.0);
        r.robin = std::max(r.robin, std::abs(top_z - kInvSqrt3 * top_val));
    }
    return r;
}

} // namespace crestwave
