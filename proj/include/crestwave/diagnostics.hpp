#pragma once

#include "crestwave/error.hpp"
#include "crestwave/halfstrip.hpp"
#include "crestwave/spectrum.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace crestwave {

struct DecayFit {
    double rate = 0.0;       // value ~ amplitude e^{-rate q}
    double amplitude = 0.0;
    double rms_residual = 0.0;  // in log space
    double q_lo = 0.0, q_hi = 0.0;
    int samples = 0;
};

// Middle third of [lo, hi], the default fit window.
inline std::pair<double, double> middle_third(double lo, double hi) {
    return {lo + (hi - lo) / 3.0, lo + 2.0 * (hi - lo) / 3.0};
}

// Least-squares line through (q, ln|value|).
inline DecayFit fit_decay(const std::vector<double>& q, const std::vector<double>& v) {
    if (q.size() != v.size()) throw DomainError("fit_decay: q and value sizes differ");
    const int n = static_cast<int>(q.size());
    if (n < 8) throw DomainError("fit_decay: need at least 8 samples, got " + std::to_string(n));
    const double sign = v.front() > 0.0 ? 1.0 : -1.0;
    for (int k = 0; k < n; ++k)
        if (!(v[k] * sign > 0.0))
            throw SignChangeError("fit_decay: quantity not single-signed on the window (q = " + std::to_string(q[k]) +
                                  ")");
    const auto [qmin, qmax] = std::minmax_element(q.begin(), q.end());
    if (!(*qmax > *qmin)) throw DomainError("fit_decay: degenerate window");
    Eigen::MatrixXd a(n, 2);
    Eigen::VectorXd b(n);
    for (int k = 0; k < n; ++k) {
        a(k, 0) = 1.0;
        a(k, 1) = q[k];
        b(k) = std::log(std::abs(v[k]));
    }
    const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
    DecayFit f;
    f.rate = -c(1);
    f.amplitude = sign * std::exp(c(0));
    f.rms_residual = std::sqrt((a * c - b).squaredNorm() / n);
    f.q_lo = *qmin;
    f.q_hi = *qmax;
    f.samples = n;
    return f;
}

// Restricts samples to [lo, hi] before fitting.
inline DecayFit fit_decay(const std::vector<double>& q, const std::vector<double>& v, double lo, double hi) {
    std::vector<double> qs, vs;
    for (std::size_t k = 0; k < q.size(); ++k)
        if (q[k] >= lo - 1e-12 && q[k] <= hi + 1e-12) {
            qs.push_back(q[k]);
            vs.push_back(v[k]);
        }
    auto f = fit_decay(qs, vs);
    return f;
}

// Linear least squares with rank check on the column-normalised design.
inline Eigen::VectorXd least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double* rms = nullptr,
                                     double rank_tol = 1e-10) {
    Eigen::VectorXd scale = a.colwise().norm().transpose();
    for (int j = 0; j < scale.size(); ++j)
        if (!(scale(j) > 0.0)) throw RankError("least squares: zero basis column");
    const Eigen::MatrixXd an = a * scale.cwiseInverse().asDiagonal();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(an, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    if (s(s.size() - 1) < rank_tol * s(0))
        throw RankError("least squares: rank-deficient basis (window too narrow)");
    Eigen::VectorXd c = svd.solve(b).cwiseQuotient(scale);
    if (rms) *rms = std::sqrt((a * c - b).squaredNorm() / static_cast<double>(b.size()));
    return c;
}

// Second coefficient of xi: least squares of (xi - (omega1/3) e^{-q/2}) e^{q} on [lo, hi] against
// {1, e^{-(rem - 1) q}, e^{-q/2}}, the known structure of the neglected terms.
struct SecondCoefficientFit {
    double value = 0.0;  // estimate of lambda omega1^2
    double remainder_amp = 0.0;
    double half_amp = 0.0;
    double rms = 0.0;
    double window_mean = 0.0;  // plain mean over the window, for reference
};

inline SecondCoefficientFit fit_second_coefficient(const std::vector<double>& q, const std::vector<double>& xi,
                                                   double omega1, double lo, double hi,
                                                   double remainder_exp = remainder_exponent()) {
    std::vector<int> idx;
    for (std::size_t k = 0; k < q.size(); ++k)
        if (q[k] >= lo - 1e-12 && q[k] <= hi + 1e-12) idx.push_back(static_cast<int>(k));
    const int n = static_cast<int>(idx.size());
    if (n < 8) throw DomainError("second coefficient: need at least 8 samples");
    Eigen::MatrixXd a(n, 3);
    Eigen::VectorXd b(n);
    double mean = 0.0;
    for (int r = 0; r < n; ++r) {
        const double qq = q[idx[r]];
        b(r) = (xi[idx[r]] - omega1 / 3.0 * std::exp(-0.5 * qq)) * std::exp(qq);
        a(r, 0) = 1.0;
        a(r, 1) = std::exp(-(remainder_exp - 1.0) * qq);
        a(r, 2) = std::exp(-0.5 * qq);
        mean += b(r);
    }
    SecondCoefficientFit f;
    const Eigen::VectorXd c = least_squares(a, b, &f.rms);
    f.value = c(0);
    f.remainder_amp = c(1);
    f.half_amp = c(2);
    f.window_mean = mean / n;
    return f;
}

struct SurfaceCoeffFit {
    double kappa_hat = 0.0;
    double a1_hat = 0.0;  // coefficient of x, i.e. a1 omega1^2
    double remainder_coeff = 0.0;
    double rms = 0.0;
};

// eta_x + 1/sqrt3 against {sqrt(x), x, x^{(3/2)(tau1 - 1)}}.
inline SurfaceCoeffFit extract_surface_coeffs(const std::vector<double>& x, const std::vector<double>& eta_x,
                                              double tau1 = solve_eigenpair(1).tau) {
    if (x.size() != eta_x.size()) throw DomainError("surface coeffs: sizes differ");
    const int n = static_cast<int>(x.size());
    if (n < 12) throw DomainError("surface coeffs: need at least 12 samples");
    const double p = remainder_exponent(tau1);
    Eigen::MatrixXd a(n, 3);
    Eigen::VectorXd b(n);
    for (int k = 0; k < n; ++k) {
        if (!(x[k] > 0.0)) throw DomainError("surface coeffs: x must be positive");
        a(k, 0) = std::sqrt(x[k]);
        a(k, 1) = x[k];
        a(k, 2) = std::pow(x[k], p);
        b(k) = eta_x[k] + kInvSqrt3;
    }
    SurfaceCoeffFit f;
    const Eigen::VectorXd c = least_squares(a, b, &f.rms);
    f.kappa_hat = c(0);
    f.a1_hat = c(1);
    f.remainder_coeff = c(2);
    return f;
}

// Samples restricted to the q-window [lo, hi].
inline SurfaceSamples restrict_samples(const SurfaceSamples& s, double q_lo, double q_hi) {
    SurfaceSamples out;
    for (std::size_t k = 0; k < s.x.size(); ++k)
        if (s.q[k] >= q_lo && s.q[k] <= q_hi) {
            out.x.push_back(s.x[k]);
            out.eta_x.push_back(s.eta_x[k]);
            out.q.push_back(s.q[k]);
        }
    return out;
}

struct HolderScan {
    double c1 = 0.0, c2 = 0.0, ratio = 1.0;
    double rho_min = 0.0, rho_max = 0.0;
    int samples = 0;
};

struct HolderOptions {
    std::vector<double> rays{-0.5 * std::numbers::pi, -std::numbers::pi / 3.0, -0.25 * std::numbers::pi};
    double q_lo = std::numeric_limits<double>::quiet_NaN();  // defaults: interior q-lines
    double q_hi = std::numeric_limits<double>::quiet_NaN();
};

// psi_y / rho^{1/2} = sin(theta) g - cos(theta) A u_z with u = e^{3q/2} psi_bar, g = u_q - (3/2) u - c u_z.
inline HolderScan holder_scan(const StripField& f, const HolderOptions& opt = {}) {
    const auto zd = make_z_discretization(f.grid.nz, f.grid.spacing);
    const int nq = f.grid.nq, nz = f.grid.nz;
    const double h = f.grid.h();
    const double hp = 0.5 * std::numbers::pi;
    const double lo = std::isnan(opt.q_lo) ? f.q[1] : opt.q_lo;
    const double hi = std::isnan(opt.q_hi) ? f.q[nq - 2] : opt.q_hi;
    HolderScan out;
    out.c1 = std::numeric_limits<double>::infinity();
    out.c2 = -std::numeric_limits<double>::infinity();
    Eigen::MatrixXd u(nq, nz);
    for (int i = 0; i < nq; ++i)
        for (int j = 0; j < nz; ++j) u(i, j) = std::exp(1.5 * f.q[i]) * f.psi_bar(i, j);
    const Eigen::MatrixXd uz = u * zd.d1.transpose();
    for (int i = 0; i < nq; ++i) {
        if (f.q[i] < lo - 1e-12 || f.q[i] > hi + 1e-12) continue;
        const auto st = detail::q_stencil(i, nq, h);
        Eigen::VectorXd uq = Eigen::VectorXd::Zero(nz);
        for (int k = 0; k < st.n; ++k) uq += st.w1[k] * u.row(i + st.off[k]).transpose();
        const double dn = f.zeta[i] + hp;
        const double a = hp / dn;
        Eigen::VectorXd urow = u.row(i).transpose(), uzrow = uz.row(i).transpose();
        for (double theta : opt.rays) {
            if (theta < -hp - 1e-12 || theta > f.zeta[i]) continue;
            const double z = hp * (theta + hp) / dn;
            const double c = z * f.zeta_q[i] / dn;
            const double uv = zd.interpolate(urow, z), uqv = zd.interpolate(uq, z), uzv = zd.interpolate(uzrow, z);
            const double g = uqv - 1.5 * uv - c * uzv;
            const double val = std::sin(theta) * g - std::cos(theta) * a * uzv;
            out.c1 = std::min(out.c1, val);
            out.c2 = std::max(out.c2, val);
            ++out.samples;
        }
        const double rho = std::exp(-f.q[i]);
        if (out.rho_max == 0.0) out.rho_max = rho;
        out.rho_min = rho;
    }
    if (out.samples == 0) throw DomainError("holder_scan: no samples in the requested window");
    out.ratio = out.c1 > 0.0 ? out.c2 / out.c1 : std::numeric_limits<double>::infinity();
    return out;
}

enum class Concavity { concave, not_concave, indeterminate };

inline const char* to_string(Concavity c) {
    switch (c) {
    case Concavity::concave: return "true";
    case Concavity::not_concave: return "false";
    case Concavity::indeterminate: return "indeterminate";
    }
    return "?";
}

struct ConcavityResult {
    Concavity status = Concavity::indeterminate;
    std::optional<double> first_violation;  // x at the first interior sample with eta_xx >= 0
    double max_eta_xx = 0.0;
};

// Concave iff the finite-difference eta_xx is negative at every interior sample; flat data
// (all differences of eta_x within flat_tol) is indeterminate.
inline ConcavityResult concavity_check(const std::vector<double>& x, const std::vector<double>& eta_x,
                                       double flat_tol = 1e-9) {
    if (x.size() != eta_x.size()) throw DomainError("concavity: sizes differ");
    const std::size_t n = x.size();
    if (n < 3) throw DomainError("concavity: need at least 3 samples");
    const bool up = x[1] > x[0];
    for (std::size_t k = 1; k < n; ++k)
        if ((x[k] > x[k - 1]) != up || x[k] == x[k - 1]) throw DomainError("concavity: x must be monotone");
    ConcavityResult r;
    double spread = 0.0;
    for (std::size_t k = 1; k < n; ++k) spread = std::max(spread, std::abs(eta_x[k] - eta_x[0]));
    r.max_eta_xx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const double d = (eta_x[k + 1] - eta_x[k - 1]) / (x[k + 1] - x[k - 1]);
        r.max_eta_xx = std::max(r.max_eta_xx, d);
        if (!(d < 0.0) && !r.first_violation) r.first_violation = x[k];
    }
    if (spread <= flat_tol) {
        r.status = Concavity::indeterminate;
        r.first_violation.reset();
        return r;
    }
    r.status = r.first_violation ? Concavity::not_concave : Concavity::concave;
    return r;
}

} // namespace crestwave
