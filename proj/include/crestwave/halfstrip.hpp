#pragma once

#include "crestwave/asymptotics.hpp"
#include "crestwave/chebyshev.hpp"
#include "crestwave/coefficients.hpp"
#include "crestwave/error.hpp"
#include "crestwave/lambda_pipeline.hpp"
#include "crestwave/spectrum.hpp"
#include "crestwave/transforms.hpp"
#include "crestwave/vorticity.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace crestwave {

enum class ZSpacing { chebyshev, uniform };

inline const char* to_string(ZSpacing s) { return s == ZSpacing::chebyshev ? "chebyshev" : "uniform"; }

inline ZSpacing zspacing_from_string(const std::string& s) {
    if (s == "chebyshev") return ZSpacing::chebyshev;
    if (s == "uniform") return ZSpacing::uniform;
    throw DomainError("strip grid: unknown z spacing \"" + s + "\"");
}

// Truncated half-strip [q0, Q] x [0, pi/2]; nq q-lines uniformly spaced, nz z-nodes.
struct StripGrid {
    double q0 = 2.0;
    double Q = 14.0;
    int nq = 480;
    int nz = 64;
    ZSpacing spacing = ZSpacing::chebyshev;

    void validate() const {
        if (!(Q - q0 >= 5.0)) throw DomainError("strip grid: need Q - q0 >= 5");
        if (nq < 4 * (Q - q0)) throw DomainError("strip grid: need at least 4 q-lines per unit q");
        if (nz < 8) throw DomainError("strip grid: need at least 8 z-nodes");
    }
    double h() const { return (Q - q0) / (nq - 1); }
    double q(int i) const { return i == nq - 1 ? Q : q0 + i * h(); }
};

// z-nodes with differentiation matrices and quadrature weights.
struct ZDiscretization {
    std::vector<double> z;
    Eigen::MatrixXd d1, d2;
    std::vector<double> weights;
    ZSpacing spacing = ZSpacing::chebyshev;
    cheb::Grid cheb;

    int size() const { return static_cast<int>(z.size()); }

    // Barycentric on Chebyshev nodes, local cubic Lagrange on uniform nodes.
    template <class Values>
    double interpolate(const Values& f, double zeval) const {
        if (spacing == ZSpacing::chebyshev) return cheb::interpolate(cheb, f, zeval);
        const int n = size();
        const double dz = z[1] - z[0];
        int k = std::clamp(static_cast<int>(std::floor(zeval / dz)) - 1, 0, n - 4);
        double acc = 0.0;
        for (int a = k; a < k + 4; ++a) {
            double l = 1.0;
            for (int b = k; b < k + 4; ++b)
                if (b != a) l *= (zeval - z[b]) / (z[a] - z[b]);
            acc += l * f[a];
        }
        return acc;
    }
};

inline ZDiscretization make_z_discretization(int nz, ZSpacing spacing) {
    const double half_pi = 0.5 * std::numbers::pi;
    ZDiscretization d;
    d.spacing = spacing;
    if (spacing == ZSpacing::chebyshev) {
        d.cheb = cheb::make_grid(static_cast<std::size_t>(nz), half_pi);
        d.z = d.cheb.z;
        d.d1 = d.cheb.d1;
        d.d2 = d.cheb.d2;
        d.weights = d.cheb.weights;
        return d;
    }
    // Second-order finite differences, one-sided at the ends; trapezoid weights.
    const double dz = half_pi / (nz - 1);
    d.z.resize(nz);
    for (int k = 0; k < nz; ++k) d.z[k] = k == nz - 1 ? half_pi : k * dz;
    d.d1 = Eigen::MatrixXd::Zero(nz, nz);
    d.d2 = Eigen::MatrixXd::Zero(nz, nz);
    for (int k = 1; k < nz - 1; ++k) {
        d.d1(k, k - 1) = -0.5 / dz;
        d.d1(k, k + 1) = 0.5 / dz;
        d.d2(k, k - 1) = d.d2(k, k + 1) = 1.0 / (dz * dz);
        d.d2(k, k) = -2.0 / (dz * dz);
    }
    const int n = nz - 1;
    d.d1(0, 0) = -1.5 / dz, d.d1(0, 1) = 2.0 / dz, d.d1(0, 2) = -0.5 / dz;
    d.d1(n, n) = 1.5 / dz, d.d1(n, n - 1) = -2.0 / dz, d.d1(n, n - 2) = 0.5 / dz;
    const double i2 = 1.0 / (dz * dz);
    d.d2(0, 0) = 2 * i2, d.d2(0, 1) = -5 * i2, d.d2(0, 2) = 4 * i2, d.d2(0, 3) = -i2;
    d.d2(n, n) = 2 * i2, d.d2(n, n - 1) = -5 * i2, d.d2(n, n - 2) = 4 * i2, d.d2(n, n - 3) = -i2;
    d.weights.assign(nz, dz);
    d.weights.front() = d.weights.back() = 0.5 * dz;
    return d;
}

namespace detail {

// Second-order q-stencils: centered inside, one-sided on the end lines.
struct QStencil {
    std::array<int, 4> off{};
    std::array<double, 4> w1{}, w2{};
    int n = 0;
};

inline QStencil q_stencil(int i, int nq, double h) {
    QStencil s;
    const double ih = 1.0 / h, ih2 = 1.0 / (h * h);
    if (i == 0) {
        s.n = 4;
        s.off = {0, 1, 2, 3};
        s.w1 = {-1.5 * ih, 2.0 * ih, -0.5 * ih, 0.0};
        s.w2 = {2.0 * ih2, -5.0 * ih2, 4.0 * ih2, -1.0 * ih2};
    } else if (i == nq - 1) {
        s.n = 4;
        s.off = {0, -1, -2, -3};
        s.w1 = {1.5 * ih, -2.0 * ih, 0.5 * ih, 0.0};
        s.w2 = {2.0 * ih2, -5.0 * ih2, 4.0 * ih2, -1.0 * ih2};
    } else {
        s.n = 3;
        s.off = {-1, 0, 1};
        s.w1 = {-0.5 * ih, 0.0, 0.5 * ih};
        s.w2 = {ih2, -2.0 * ih2, ih2};
    }
    return s;
}

inline double corner_u(double z) { return (2.0 / 3.0) * std::cos(z); }
inline double corner_uz(double z) { return -(2.0 / 3.0) * std::sin(z); }

} // namespace detail

// Discrete zeta_q: centered differences, one-sided second order at the ends.
inline std::vector<double> differentiate_zeta(const std::vector<double>& zeta, double h) {
    const int n = static_cast<int>(zeta.size());
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        const auto s = detail::q_stencil(i, n, h);
        double acc = 0.0;
        for (int k = 0; k < s.n; ++k) acc += s.w1[k] * zeta[i + s.off[k]];
        out[i] = acc;
    }
    return out;
}

// psi_bar(q, z) on the grid (row i is the q-line q_i) together with the free-surface angle.
struct StripField {
    StripGrid grid;
    std::vector<double> q, z;
    Eigen::MatrixXd psi_bar;
    std::vector<double> zeta, zeta_q;
    VorticityModel omega;
    CrestFrame frame;
    double residual = std::numeric_limits<double>::quiet_NaN();

    std::vector<double> xi() const {
        std::vector<double> out(zeta.size());
        for (std::size_t i = 0; i < zeta.size(); ++i) out[i] = zeta[i] + std::numbers::pi / 6.0;
        return out;
    }

    void refresh_zeta_q() { zeta_q = differentiate_zeta(zeta, grid.h()); }

    nlohmann::json to_json() const {
        std::vector<double> flat;
        flat.reserve(static_cast<std::size_t>(psi_bar.size()));
        for (int i = 0; i < psi_bar.rows(); ++i)
            for (int j = 0; j < psi_bar.cols(); ++j) flat.push_back(psi_bar(i, j));
        return {{"grid",
                 {{"q0", grid.q0}, {"Q", grid.Q}, {"nq", grid.nq}, {"nz", grid.nz}, {"spacing", to_string(grid.spacing)}}},
                {"psi_bar", flat},
                {"zeta", zeta},
                {"residual", residual},
                {"omega", omega.to_json()},
                {"frame", {{"r", frame.r}, {"delta1", frame.delta1}}}};
    }
};

inline StripField make_field(const StripGrid& grid, const VorticityModel& omega, const CrestFrame& frame = {}) {
    grid.validate();
    StripField f;
    f.grid = grid;
    f.omega = omega;
    f.frame = frame;
    f.q.resize(grid.nq);
    for (int i = 0; i < grid.nq; ++i) f.q[i] = grid.q(i);
    f.z = make_z_discretization(grid.nz, grid.spacing).z;
    f.psi_bar = Eigen::MatrixXd::Zero(grid.nq, grid.nz);
    f.zeta.assign(grid.nq, -std::numbers::pi / 6.0);
    f.zeta_q.assign(grid.nq, 0.0);
    return f;
}

inline StripField field_from_json(const nlohmann::json& j) {
    for (const char* key : {"grid", "psi_bar", "zeta"})
        if (!j.contains(key)) throw DomainError(std::string("field: missing key \"") + key + "\"");
    const auto& g = j["grid"];
    StripGrid grid;
    grid.q0 = g.at("q0").get<double>();
    grid.Q = g.at("Q").get<double>();
    grid.nq = g.at("nq").get<int>();
    grid.nz = g.at("nz").get<int>();
    grid.spacing = zspacing_from_string(g.value("spacing", std::string("chebyshev")));
    VorticityModel omega = j.contains("omega") ? VorticityModel::from_json(j["omega"]) : VorticityModel{};
    CrestFrame frame;
    if (j.contains("frame")) {
        frame.r = j["frame"].at("r").get<double>();
        frame.delta1 = j["frame"].at("delta1").get<double>();
    }
    StripField f = make_field(grid, omega, frame);
    const auto flat = j["psi_bar"].get<std::vector<double>>();
    if (flat.size() != static_cast<std::size_t>(grid.nq) * grid.nz)
        throw DomainError("field: psi_bar has " + std::to_string(flat.size()) + " entries, expected nq*nz");
    for (int i = 0; i < grid.nq; ++i)
        for (int jz = 0; jz < grid.nz; ++jz) f.psi_bar(i, jz) = flat[static_cast<std::size_t>(i) * grid.nz + jz];
    f.zeta = j["zeta"].get<std::vector<double>>();
    if (f.zeta.size() != static_cast<std::size_t>(grid.nq)) throw DomainError("field: zeta must have nq entries");
    if (j.contains("residual") && j["residual"].is_number()) f.residual = j["residual"].get<double>();
    f.refresh_zeta_q();
    return f;
}

// ---------------------------------------------------------------------------
// Composite asymptotics

struct CompositeOptions {
    bool u_star = true;         // forced correction U*
    bool xi_second = true;      // lambda omega1^2 e^{-q} in xi
    bool profile = true;        // reduced-problem profile d(z) e^{-5q/2}
    double corner_rate = 1.5;   // 3.0 gives the squared-sum reading of the psi series
};

// Reduced-problem profile d(z) for unit omega1, interpolated from the Chebyshev solve.
class ReducedProfile {
public:
    ReducedProfile() : ReducedProfile(compute_lambda()) {}

    explicit ReducedProfile(const LambdaResult& lr) : lambda_(lr.lambda), profile_(lr.profile) {
        if (lr.method != "chebyshev") throw DomainError("reduced profile: needs the Chebyshev solve");
        grid_ = cheb::make_grid(lr.profile.size(), 0.5 * std::numbers::pi);
    }

    double lambda() const { return lambda_; }
    double operator()(double z) const { return cheb::interpolate(grid_, profile_, z); }

private:
    double lambda_ = 0.0;
    std::vector<double> profile_;
    cheb::Grid grid_;
};

// One q-line of data: psi_bar at the z-nodes and the surface angle.
struct BoundaryLine {
    double q = 0.0;
    std::vector<double> psi_bar;
    double zeta = -std::numbers::pi / 6.0;
};

// Composite field at one q: corner + U* + xi coupling (+ profile), zeta from the two-term xi series.
// The xi coupling -(2/pi) z sin z xi keeps psi_bar(q, pi/2) = 0 for any xi.
inline BoundaryLine composite_line(const ExpansionCoefficients& c, double q, const std::vector<double>& z,
                                   const ReducedProfile* profile = nullptr, const CompositeOptions& opt = {}) {
    const double pi = std::numbers::pi;
    const double w = c.omega1;
    const double xi1 = w / 3.0 * std::exp(-0.5 * q);
    const double xi2 = opt.xi_second ? c.lambda * w * w * std::exp(-q) : 0.0;
    const double xi = xi1 + xi2;
    const double corner_amp = (2.0 / 3.0) * std::exp(-opt.corner_rate * q);
    BoundaryLine line;
    line.q = q;
    line.zeta = -pi / 6.0 + xi;
    line.psi_bar.resize(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) {
        const double zj = z[j];
        double v = corner_amp * (std::cos(zj) - (3.0 / pi) * zj * std::sin(zj) * xi);
        if (opt.u_star) v += u_star({q, zj}, w);
        if (opt.profile && profile) v += w * w * (*profile)(zj) * std::exp(-2.5 * q);
        line.psi_bar[j] = v;
    }
    return line;
}

// Dirichlet data for psi_bar and zeta(Q) from the composite asymptotics.
inline BoundaryLine far_field_closure(const ExpansionCoefficients& c, double q, const std::vector<double>& z,
                                      const ReducedProfile* profile = nullptr, const CompositeOptions& opt = {}) {
    return composite_line(c, q, z, profile, opt);
}

inline StripField composite_field(const StripGrid& grid, const ExpansionCoefficients& c,
                                  const ReducedProfile* profile = nullptr, const CompositeOptions& opt = {},
                                  const CrestFrame& frame = {}) {
    StripField f = make_field(grid, VorticityModel::constant(c.omega1), frame);
    for (int i = 0; i < grid.nq; ++i) {
        const auto line = composite_line(c, f.q[i], f.z, profile, opt);
        for (int j = 0; j < grid.nz; ++j) f.psi_bar(i, j) = line.psi_bar[j];
        f.zeta[i] = line.zeta;
    }
    f.refresh_zeta_q();
    return f;
}

// ---------------------------------------------------------------------------
// Residual of the strip system

namespace detail {

// Geometric coefficients of the flattened Laplacian on one q-line.
struct LineGeometry {
    double dn = 0.0, zq = 0.0, zqq = 0.0;
};

// Scaled variables u = e^{3q/2} psi_bar. W holds u minus the corner profile (2/3) cos z so the
// z-derivatives of the O(1) corner part are exact and roundoff scales with the deviation.
struct ScaledState {
    Eigen::MatrixXd W;    // nq x nz
    Eigen::MatrixXd DW1;  // W d1^T
    Eigen::MatrixXd DW2;  // W d2^T
    std::vector<double> zeta;
    std::vector<LineGeometry> geom;
};

inline void finish_state(ScaledState& s, const ZDiscretization& zd, double h) {
    s.DW1 = s.W * zd.d1.transpose();
    s.DW2 = s.W * zd.d2.transpose();
    const int nq = static_cast<int>(s.zeta.size());
    s.geom.resize(nq);
    for (int i = 0; i < nq; ++i) {
        const auto st = q_stencil(i, nq, h);
        double zq = 0.0, zqq = 0.0;
        for (int k = 0; k < st.n; ++k) {
            zq += st.w1[k] * s.zeta[i + st.off[k]];
            zqq += st.w2[k] * s.zeta[i + st.off[k]];
        }
        s.geom[i] = {s.zeta[i] + 0.5 * std::numbers::pi, zq, zqq};
    }
}

struct NodeTerms {
    double u, uq, uqq, uz, uqz, uzz_dev;
};

inline NodeTerms node_terms(const ScaledState& s, const ZDiscretization& zd, const QStencil& st, int i, int j) {
    NodeTerms t{};
    const double uref = corner_u(zd.z[j]);
    t.u = s.W(i, j) + uref;
    for (int k = 0; k < st.n; ++k) {
        const int ii = i + st.off[k];
        t.uq += st.w1[k] * s.W(ii, j);
        t.uqq += st.w2[k] * s.W(ii, j);
        t.uqz += st.w1[k] * s.DW1(ii, j);
    }
    t.uz = s.DW1(i, j) + corner_uz(zd.z[j]);
    t.uzz_dev = s.DW2(i, j);  // u_zz = uzz_dev - uref
    return t;
}

// Scaled interior residual e^{3q/2} x (flattened Laplacian of psi_bar - e^{-2q} omega(1 - psi_bar)).
inline double interior_scaled(const NodeTerms& t, double zj, double uref, const LineGeometry& g, double q,
                              const VorticityModel& omega) {
    const double hp = 0.5 * std::numbers::pi;
    const double c = zj * g.zq / g.dn;
    const double cz = zj * (-g.zqq / g.dn + 2.0 * g.zq * g.zq / (g.dn * g.dn) + 3.0 * g.zq / g.dn);
    const double czz = (zj * zj * g.zq * g.zq + hp * hp) / (g.dn * g.dn);
    const double psi_bar = std::exp(-1.5 * q) * t.u;
    return t.uqq - 3.0 * t.uq + czz * t.uzz_dev + 2.25 * (t.u - uref) + (2.25 - czz) * uref + cz * t.uz -
           2.0 * c * t.uqz - std::exp(-0.5 * q) * omega.value(1.0 - psi_bar);
}

// Scaled Bernoulli e^{3q} x ([psi_bar_q - c psi_bar_z]^2 + A^2 psi_bar_z^2 + 2 e^{-3q} sin zeta) at z = pi/2.
inline double bernoulli_scaled(double u, double uq, double uz, const LineGeometry& g, double zeta) {
    const double hp = 0.5 * std::numbers::pi;
    const double ct = hp * g.zq / g.dn;
    const double a = hp / g.dn;
    const double gq = uq - 1.5 * u - ct * uz;
    return gq * gq + a * a * uz * uz + 2.0 * std::sin(zeta);
}

} // namespace detail

struct ResidualReport {
    std::vector<double> q;
    Eigen::MatrixXd interior;  // nq x nz, zero on the z-boundary nodes
    std::vector<double> bottom, top, bernoulli;
    bool domain_extended = false;

    double line_max(int i) const {
        double m = interior.row(i).cwiseAbs().maxCoeff();
        return std::max({m, std::abs(bottom[i]), std::abs(top[i]), std::abs(bernoulli[i])});
    }
    double interior_max() const { return interior.cwiseAbs().maxCoeff(); }
    static double vmax(const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }
    double max() const { return std::max({interior_max(), vmax(bottom), vmax(top), vmax(bernoulli)}); }
    // Lines 1..nq-2 only: the end lines carry Dirichlet data in the solver, not the equations.
    double solved_max() const {
        double m = 0.0;
        for (int i = 1; i + 1 < static_cast<int>(q.size()); ++i) m = std::max(m, line_max(i));
        return m;
    }
};

namespace detail {

inline ScaledState scaled_state(const StripField& f, const ZDiscretization& zd) {
    ScaledState s;
    const int nq = f.grid.nq, nz = f.grid.nz;
    s.W.resize(nq, nz);
    for (int i = 0; i < nq; ++i) {
        const double e = std::exp(1.5 * f.q[i]);
        for (int j = 0; j < nz; ++j) s.W(i, j) = e * f.psi_bar(i, j) - corner_u(zd.z[j]);
    }
    s.zeta = f.zeta;
    finish_state(s, zd, f.grid.h());
    return s;
}

} // namespace detail

// Unscaled residuals of the strip system: interior equation, bottom Neumann, surface Dirichlet, Bernoulli.
// z-derivatives use the grid's differentiation matrices, q-derivatives second-order differences.
inline ResidualReport assemble_residual(const StripField& f) {
    const auto zd = make_z_discretization(f.grid.nz, f.grid.spacing);
    const auto s = detail::scaled_state(f, zd);
    const int nq = f.grid.nq, nz = f.grid.nz;
    const double h = f.grid.h();
    ResidualReport r;
    r.q = f.q;
    r.interior = Eigen::MatrixXd::Zero(nq, nz);
    r.bottom.resize(nq);
    r.top.resize(nq);
    r.bernoulli.resize(nq);
    for (int i = 0; i < nq; ++i) {
        const auto st = detail::q_stencil(i, nq, h);
        const double qi = f.q[i];
        const double down = std::exp(-1.5 * qi);
        for (int j = 1; j < nz - 1; ++j) {
            const auto t = detail::node_terms(s, zd, st, i, j);
            if (!f.omega.in_band(1.0 - down * t.u)) r.domain_extended = true;
            r.interior(i, j) =
                down * detail::interior_scaled(t, zd.z[j], detail::corner_u(zd.z[j]), s.geom[i], qi, f.omega);
        }
        r.bottom[i] = down * s.DW1(i, 0);
        r.top[i] = f.psi_bar(i, nz - 1);
        const auto tt = detail::node_terms(s, zd, st, i, nz - 1);
        r.bernoulli[i] = down * down * detail::bernoulli_scaled(tt.u, tt.uq, tt.uz, s.geom[i], f.zeta[i]);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Newton solver

struct NewtonOptions {
    int max_iter = 50;
    double tol = 1e-10;
    double armijo = 1e-4;
    double min_step = 1.0 / 64.0;
    // Leave the non-decaying oscillatory mode free at q0 and pin its q-derivative at Q.
    bool oscillatory_mode_closure = true;
    CompositeOptions composite{};
};

struct NewtonReport {
    int iterations = 0;
    bool converged = false;
    std::vector<double> residual_history;  // max-norm of the scaled system
    std::vector<double> step_history;      // accepted damping factors
    double alpha = 0.0;                    // amplitude of the free inflow mode
    bool domain_extended = false;
};

// Inflow and outflow data plus the reference lines used by the derivative closure.
struct StripProblem {
    StripGrid grid;
    VorticityModel omega;
    CrestFrame frame;
    std::function<BoundaryLine(double)> reference;  // composite asymptotics
    std::optional<BoundaryLine> inflow;             // replaces reference(q0) when set
};

namespace detail {

class StripSystem {
public:
    StripSystem(const StripProblem& p, const NewtonOptions& opt)
        : p_(p), opt_(opt), zd_(make_z_discretization(p.grid.nz, p.grid.spacing)), nq_(p.grid.nq),
          nz_(p.grid.nz), h_(p.grid.h()) {
        q_.resize(nq_);
        for (int i = 0; i < nq_; ++i) q_[i] = p.grid.q(i);
        const double hp = 0.5 * std::numbers::pi;
        const auto e0 = solve_eigenpair(0);
        m0_.resize(nz_);
        wproj_.resize(nz_);
        sgeo_.resize(nz_);
        for (int j = 0; j < nz_; ++j) {
            const double zj = zd_.z[j];
            sgeo_[j] = (2.0 / std::numbers::pi) * zj * std::sin(zj);
            m0_[j] = std::cosh(e0.tau * zj) - sgeo_[j] * std::cosh(e0.tau * hp);
            m0_top_ = std::cosh(e0.tau * hp);
            wproj_[j] = zd_.weights[j] * std::cosh(e0.tau * zj);
        }
        auto to_scaled = [&](const BoundaryLine& b) {
            std::vector<double> u(nz_);
            const double e = std::exp(1.5 * b.q);
            for (int j = 0; j < nz_; ++j) u[j] = e * b.psi_bar[j];
            return u;
        };
        for (int k = 0; k < 3; ++k) {
            const int i = nq_ - 1 - k;
            const auto line = p.reference(q_[i]);
            ref_u_[k] = to_scaled(line);
            ref_zeta_[k] = line.zeta;
        }
        const BoundaryLine in = p.inflow ? *p.inflow : p.reference(q_[0]);
        if (in.psi_bar.size() != static_cast<std::size_t>(nz_)) throw DomainError("newton: inflow size mismatch");
        in_u_ = to_scaled(in);
        in_zeta_ = in.zeta;
        mu_ = nz_ - 1;
        block_ = nz_;
        n_ = nq_ * block_ + 1;
    }

    int size() const { return n_; }
    const ZDiscretization& zd() const { return zd_; }
    const std::vector<double>& q() const { return q_; }
    int uidx(int i, int j) const { return i * block_ + j; }
    int zidx(int i) const { return i * block_ + mu_; }
    int aidx() const { return n_ - 1; }

    Eigen::VectorXd initial_guess() const {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(n_);
        for (int i = 0; i < nq_; ++i) {
            const auto line = p_.reference(q_[i]);
            const double e = std::exp(1.5 * q_[i]);
            for (int j = 0; j < mu_; ++j) x(uidx(i, j)) = e * line.psi_bar[j] - corner_u(zd_.z[j]);
            x(zidx(i)) = line.zeta;
        }
        for (int j = 0; j < mu_; ++j) x(uidx(0, j)) = in_u_[j] - corner_u(zd_.z[j]);
        x(zidx(0)) = in_zeta_;
        return x;
    }

    ScaledState state(const Eigen::VectorXd& x) const {
        ScaledState s;
        s.W.resize(nq_, nz_);
        s.zeta.resize(nq_);
        for (int i = 0; i < nq_; ++i) {
            for (int j = 0; j < mu_; ++j) s.W(i, j) = x(uidx(i, j));
            s.W(i, mu_) = -corner_u(zd_.z[mu_]);  // u = 0 on the surface
            s.zeta[i] = x(zidx(i));
        }
        finish_state(s, zd_, h_);
        return s;
    }

    Eigen::VectorXd residual(const Eigen::VectorXd& x, bool* extended = nullptr) const {
        const auto s = state(x);
        Eigen::VectorXd F(n_);
        bool ext = false;
        const double alpha = opt_.oscillatory_mode_closure ? x(aidx()) : 0.0;
        for (int i = 0; i < nq_; ++i) {
            const auto st = q_stencil(i, nq_, h_);
            if (i == 0 || i == nq_ - 1) {
                for (int j = 0; j < mu_; ++j) {
                    const double u = s.W(i, j) + corner_u(zd_.z[j]);
                    F(uidx(i, j)) = i == 0 ? u - in_u_[j] - alpha * m0_[j] : u - ref_u_[0][j];
                }
            } else {
                F(uidx(i, 0)) = s.DW1(i, 0);
                for (int j = 1; j < mu_; ++j) {
                    const auto t = node_terms(s, zd_, st, i, j);
                    if (!p_.omega.in_band(1.0 - std::exp(-1.5 * q_[i]) * t.u)) ext = true;
                    F(uidx(i, j)) = interior_scaled(t, zd_.z[j], corner_u(zd_.z[j]), s.geom[i], q_[i], p_.omega);
                }
            }
            if (i == 0) {
                F(zidx(i)) = s.zeta[i] - in_zeta_ - alpha * m0_top_;
            } else if (i == nq_ - 1) {
                F(zidx(i)) = s.zeta[i] - ref_zeta_[0];
            } else {
                const double uz = s.DW1(i, mu_) + corner_uz(zd_.z[mu_]);
                F(zidx(i)) = bernoulli_scaled(0.0, 0.0, uz, s.geom[i], s.zeta[i]);
            }
        }
        F(aidx()) = opt_.oscillatory_mode_closure ? closure_row(s) : x(aidx());
        if (extended) *extended = ext;
        return F;
    }

    Eigen::SparseMatrix<double> jacobian(const Eigen::VectorXd& x) const {
        const auto s = state(x);
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(n_) * (3 * nz_ + 8));
        const auto& D1 = zd_.d1;
        const auto& D2 = zd_.d2;
        const double hp = 0.5 * std::numbers::pi;
        for (int i = 0; i < nq_; ++i) {
            const auto st = q_stencil(i, nq_, h_);
            const auto& g = s.geom[i];
            if (i == 0 || i == nq_ - 1) {
                for (int j = 0; j < mu_; ++j) {
                    trip.emplace_back(uidx(i, j), uidx(i, j), 1.0);
                    if (i == 0 && opt_.oscillatory_mode_closure) trip.emplace_back(uidx(i, j), aidx(), -m0_[j]);
                }
            } else {
                for (int k = 0; k < mu_; ++k) trip.emplace_back(uidx(i, 0), uidx(i, k), D1(0, k));
                const double eq = std::exp(-2.0 * q_[i]);
                for (int j = 1; j < mu_; ++j) {
                    const double zj = zd_.z[j];
                    const auto t = node_terms(s, zd_, st, i, j);
                    const double uzz = t.uzz_dev - corner_u(zj);
                    const double c = zj * g.zq / g.dn;
                    const double cz = zj * (-g.zqq / g.dn + 2.0 * g.zq * g.zq / (g.dn * g.dn) + 3.0 * g.zq / g.dn);
                    const double czz = (zj * zj * g.zq * g.zq + hp * hp) / (g.dn * g.dn);
                    const int row = uidx(i, j);
                    const double psi = 1.0 - std::exp(-1.5 * q_[i]) * t.u;
                    const double react = 2.25 + eq * p_.omega.derivative(psi);
                    for (int a = 0; a < st.n; ++a) {
                        const int ii = i + st.off[a];
                        const double diag = st.w2[a] - 3.0 * st.w1[a] + (st.off[a] == 0 ? react : 0.0);
                        const double cross = -2.0 * c * st.w1[a];
                        for (int k = 0; k < mu_; ++k) {
                            double v = cross * D1(j, k);
                            if (st.off[a] == 0) v += cz * D1(j, k) + czz * D2(j, k);
                            if (k == j) v += diag;
                            if (v != 0.0) trip.emplace_back(row, uidx(ii, k), v);
                        }
                    }
                    const double dn = g.dn, dn2 = dn * dn, dn3 = dn2 * dn;
                    const double dR_ddn = t.uz * zj * (g.zqq / dn2 - 4.0 * g.zq * g.zq / dn3 - 3.0 * g.zq / dn2) +
                                          2.0 * t.uqz * zj * g.zq / dn2 -
                                          2.0 * (zj * zj * g.zq * g.zq + hp * hp) / dn3 * uzz;
                    const double dR_dzq = t.uz * zj * (4.0 * g.zq / dn2 + 3.0 / dn) - 2.0 * t.uqz * zj / dn +
                                          2.0 * zj * zj * g.zq / dn2 * uzz;
                    const double dR_dzqq = -t.uz * zj / dn;
                    add_zeta_terms(trip, row, i, st, dR_ddn, dR_dzq, dR_dzqq);
                }
            }
            if (i == 0 || i == nq_ - 1) {
                trip.emplace_back(zidx(i), zidx(i), 1.0);
                if (i == 0 && opt_.oscillatory_mode_closure) trip.emplace_back(zidx(i), aidx(), -m0_top_);
                continue;
            }
            // Bernoulli row with u = u_q = 0 on the surface.
            const double uz = s.DW1(i, mu_) + corner_uz(zd_.z[mu_]);
            const double dn = g.dn;
            const double kf = hp * hp * (g.zq * g.zq + 1.0) / (dn * dn);
            const int row = zidx(i);
            for (int k = 0; k < mu_; ++k) trip.emplace_back(row, uidx(i, k), 2.0 * kf * uz * D1(mu_, k));
            const double dB_ddn = -2.0 * kf / dn * uz * uz;
            const double dB_dzq = 2.0 * hp * hp * g.zq / (dn * dn) * uz * uz;
            add_zeta_terms(trip, row, i, st, dB_ddn, dB_dzq, 0.0);
            trip.emplace_back(row, zidx(i), 2.0 * std::cos(s.zeta[i]));
        }
        if (opt_.oscillatory_mode_closure) {
            const auto st = q_stencil(nq_ - 1, nq_, h_);
            double sw = 0.0;
            for (int j = 0; j < nz_; ++j) sw += wproj_[j] * sgeo_[j];
            for (int a = 0; a < st.n; ++a) {
                if (st.w1[a] == 0.0) continue;
                const int ii = nq_ - 1 + st.off[a];
                for (int j = 0; j < mu_; ++j) trip.emplace_back(aidx(), uidx(ii, j), st.w1[a] * wproj_[j]);
                trip.emplace_back(aidx(), zidx(ii), st.w1[a] * sw);
            }
        } else {
            trip.emplace_back(aidx(), aidx(), 1.0);
        }
        Eigen::SparseMatrix<double> J(n_, n_);
        J.setFromTriplets(trip.begin(), trip.end());
        return J;
    }

    StripField to_field(const Eigen::VectorXd& x) const {
        StripField f = make_field(p_.grid, p_.omega, p_.frame);
        const auto s = state(x);
        for (int i = 0; i < nq_; ++i) {
            const double down = std::exp(-1.5 * q_[i]);
            for (int j = 0; j < nz_; ++j) f.psi_bar(i, j) = down * (s.W(i, j) + corner_u(zd_.z[j]));
            f.psi_bar(i, mu_) = 0.0;
            f.zeta[i] = s.zeta[i];
        }
        f.refresh_zeta_q();
        return f;
    }

private:
    void add_zeta_terms(std::vector<Eigen::Triplet<double>>& trip, int row, int i, const QStencil& st, double ddn,
                        double dzq, double dzqq) const {
        trip.emplace_back(row, zidx(i), ddn);
        for (int a = 0; a < st.n; ++a) {
            const double v = dzq * st.w1[a] + dzqq * st.w2[a];
            if (v != 0.0) trip.emplace_back(row, zidx(i + st.off[a]), v);
        }
    }

    // Projection of the q-derivative of the deviation from the reference onto the j = 0 mode at Q.
    double closure_row(const ScaledState& s) const {
        const auto st = q_stencil(nq_ - 1, nq_, h_);
        double acc = 0.0;
        for (int a = 0; a < st.n; ++a) {
            if (st.w1[a] == 0.0) continue;
            const int k = -st.off[a];
            const int ii = nq_ - 1 - k;
            double proj = 0.0;
            for (int j = 0; j < nz_; ++j) {
                const double du = s.W(ii, j) + corner_u(zd_.z[j]) - ref_u_[k][j];
                proj += wproj_[j] * (du + sgeo_[j] * (s.zeta[ii] - ref_zeta_[k]));
            }
            acc += st.w1[a] * proj;
        }
        return acc;
    }

    StripProblem p_;
    NewtonOptions opt_;
    ZDiscretization zd_;
    int nq_, nz_;
    double h_;
    std::vector<double> q_;
    std::vector<double> m0_, wproj_, sgeo_;
    double m0_top_ = 0.0;
    std::array<std::vector<double>, 3> ref_u_;
    std::array<double, 3> ref_zeta_{};
    std::vector<double> in_u_;
    double in_zeta_ = 0.0;
    int mu_ = 0, block_ = 0, n_ = 0;
};

} // namespace detail

// Damped Newton on (psi_bar, zeta). Inflow is Dirichlet data at q0 (a self-consistency setup, not an
// existence computation); outflow is Dirichlet data from the reference at Q.
inline StripField newton_solve(const StripProblem& problem, const NewtonOptions& opt = {},
                               NewtonReport* report_out = nullptr) {
    problem.grid.validate();
    if (!problem.reference) throw DomainError("newton: reference asymptotics required");
    detail::StripSystem sys(problem, opt);
    Eigen::VectorXd x = sys.initial_guess();
    NewtonReport rep;
    bool ext = false;
    Eigen::VectorXd F = sys.residual(x, &ext);
    rep.domain_extended = ext;
    double fmax = F.lpNorm<Eigen::Infinity>();
    rep.residual_history.push_back(fmax);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    bool pattern_ready = false;
    while (fmax >= opt.tol) {
        if (rep.iterations >= opt.max_iter) {
            if (report_out) *report_out = rep;
            throw ConvergenceError("newton: no convergence after " + std::to_string(opt.max_iter) +
                                       " iterations, last residual " + std::to_string(fmax),
                                   rep.residual_history, rep.step_history);
        }
        const auto J = sys.jacobian(x);
        if (!pattern_ready) {
            lu.analyzePattern(J);
            pattern_ready = true;
        }
        lu.factorize(J);
        if (lu.info() != Eigen::Success)
            throw RankError("newton: singular Jacobian (mesh too coarse or Q too small)");
        const Eigen::VectorXd dx = lu.solve(-F);
        if (!dx.allFinite()) throw RankError("newton: non-finite Newton step");
        const double f0 = F.norm();
        double t = 1.0;
        Eigen::VectorXd xt, Ft;
        for (;;) {
            xt = x + t * dx;
            Ft = sys.residual(xt, &ext);
            if (Ft.allFinite() && Ft.norm() <= (1.0 - opt.armijo * t) * f0) break;
            if (t <= opt.min_step) break;
            t *= 0.5;
        }
        x = std::move(xt);
        F = std::move(Ft);
        rep.domain_extended = rep.domain_extended || ext;
        fmax = F.lpNorm<Eigen::Infinity>();
        ++rep.iterations;
        rep.step_history.push_back(t);
        rep.residual_history.push_back(fmax);
    }
    rep.converged = true;
    rep.alpha = opt.oscillatory_mode_closure ? x(sys.aidx()) : 0.0;
    StripField f = sys.to_field(x);
    f.residual = fmax;
    if (report_out) *report_out = rep;
    return f;
}

// Default problem: composite asymptotics supply inflow, outflow and the initial guess.
inline StripProblem default_problem(const StripGrid& grid, const VorticityModel& omega,
                                    const CompositeOptions& copt = {}, const CrestFrame& frame = {}) {
    grid.validate();
    auto profile = std::make_shared<ReducedProfile>();
    const auto coeffs =
        make_coefficients_unchecked(omega.omega_at_one(), profile->lambda(), solve_eigenpair(1).tau);
    const auto z = make_z_discretization(grid.nz, grid.spacing).z;
    StripProblem p;
    p.grid = grid;
    p.omega = omega;
    p.frame = frame;
    p.reference = [coeffs, profile, z, copt](double q) { return composite_line(coeffs, q, z, profile.get(), copt); };
    return p;
}

inline StripField newton_solve(const StripGrid& grid, const VorticityModel& omega,
                               const std::optional<BoundaryLine>& inflow = std::nullopt,
                               const NewtonOptions& opt = {}, NewtonReport* report = nullptr) {
    auto p = default_problem(grid, omega, opt.composite);
    p.inflow = inflow;
    return newton_solve(p, opt, report);
}

// ---------------------------------------------------------------------------
// Surface extraction

struct SurfaceSamples {
    std::vector<double> x, eta_x, q;
};

// Maps zeta, zeta_q to eta_x and samples it on a log-spaced x-grid via x = e^{-q} cos zeta(q).
inline SurfaceSamples extract_surface(const StripField& f, const CrestFrame& frame = {}, int npts = 241,
                                      double q_lo = std::numeric_limits<double>::quiet_NaN(),
                                      double q_hi = std::numeric_limits<double>::quiet_NaN()) {
    frame.validate();
    const int nq = f.grid.nq;
    if (npts < 2) throw DomainError("extract_surface: need at least 2 samples");
    std::vector<double> lnx(nq), ex(nq);
    for (int i = 0; i < nq; ++i) {
        lnx[i] = -f.q[i] + std::log(std::cos(f.zeta[i]));
        ex[i] = eta_x_from_zeta(f.zeta[i], f.zeta_q[i]);
    }
    for (int i = 1; i < nq; ++i)
        if (!(lnx[i] < lnx[i - 1])) throw InvariantError("extract_surface: x(q) is not monotone");
    const double qa = std::isnan(q_lo) ? f.q.front() : q_lo;
    const double qb = std::isnan(q_hi) ? f.q.back() : q_hi;
    auto at_q = [&](const std::vector<double>& v, double qq) {
        // Cubic Lagrange on the uniform q-lines.
        const double h = f.grid.h();
        int k = std::clamp(static_cast<int>(std::floor((qq - f.q[0]) / h)) - 1, 0, nq - 4);
        double acc = 0.0;
        for (int a = k; a < k + 4; ++a) {
            double l = 1.0;
            for (int b = k; b < k + 4; ++b)
                if (b != a) l *= (qq - f.q[b]) / (f.q[a] - f.q[b]);
            acc += l * v[a];
        }
        return acc;
    };
    const double x_hi = std::exp(at_q(lnx, qa)), x_lo = std::exp(at_q(lnx, qb));
    SurfaceSamples out;
    for (int k = 0; k < npts; ++k) {
        const double lx = std::log(x_hi) + (std::log(x_lo) - std::log(x_hi)) * k / (npts - 1);
        // Invert ln x(q) by bisection on the interpolant.
        double a = qa, b = qb;
        for (int it = 0; it < 100 && b - a > 1e-14; ++it) {
            const double m = 0.5 * (a + b);
            (at_q(lnx, m) > lx ? a : b) = m;
        }
        const double qq = 0.5 * (a + b);
        out.q.push_back(qq);
        out.x.push_back(std::exp(lx));
        out.eta_x.push_back(at_q(ex, qq));
    }
    std::reverse(out.x.begin(), out.x.end());
    std::reverse(out.eta_x.begin(), out.eta_x.end());
    std::reverse(out.q.begin(), out.q.end());
    return out;
}

} // namespace crestwave
