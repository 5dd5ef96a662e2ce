#pragma once

#include "crestwave/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

namespace crestwave::cheb {

using LdMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

// Chebyshev-Gauss-Lobatto grid on [0, length], ascending, endpoints included.
struct Grid {
    std::vector<double> z;
    Eigen::MatrixXd d1;  // d/dz
    Eigen::MatrixXd d2;  // d2/dz2
    std::vector<double> weights;  // Clenshaw-Curtis quadrature
    std::vector<double> bary;     // barycentric interpolation weights

    std::size_t size() const { return z.size(); }
};

inline Grid make_grid(std::size_t npts, double length) {
    if (npts < 3) throw DomainError("chebyshev: need at least 3 nodes");
    using ld = long double;
    const int n = static_cast<int>(npts) - 1;
    const ld pi = std::numbers::pi_v<long double>;
    const ld len = length;
    Grid g;
    g.z.resize(npts);
    std::vector<ld> x(npts);
    for (int k = 0; k <= n; ++k) {
        // x descends from 1 to -1; z = length (1 - x) / 2 ascends.
        x[k] = std::sin(pi * (n - 2.0L * k) / (2.0L * n));
        g.z[k] = static_cast<double>(0.5L * len * (1.0L - x[k]));
    }
    g.z.front() = 0.0;
    g.z.back() = length;

    std::vector<ld> c(npts, 1.0L);
    c.front() = c.back() = 2.0L;
    for (int k = 0; k <= n; ++k)
        if (k % 2) c[k] = -c[k];

    // Node differences via the trigonometric identity, diagonals by the negative-sum trick.
    LdMatrix dx(npts, npts);
    for (int i = 0; i <= n; ++i) {
        ld rowsum = 0.0L;
        for (int j = 0; j <= n; ++j) {
            if (i == j) continue;
            const ld diff = 2.0L * std::sin(pi * (i + j) / (2.0L * n)) * std::sin(pi * (j - i) / (2.0L * n));
            dx(i, j) = c[i] / (c[j] * diff);
            rowsum += dx(i, j);
        }
        dx(i, i) = -rowsum;
    }
    const LdMatrix d1 = (-2.0L / len) * dx;
    LdMatrix d2 = d1 * d1;
    for (int i = 0; i <= n; ++i) {
        ld rowsum = 0.0L;
        for (int j = 0; j <= n; ++j)
            if (j != i) rowsum += d2(i, j);
        d2(i, i) = -rowsum;
    }
    g.d1 = d1.cast<double>();
    g.d2 = d2.cast<double>();

    // Clenshaw-Curtis weights on [-1, 1], scaled to [0, length].
    g.weights.assign(npts, 0.0);
    for (int k = 0; k <= n; ++k) {
        const ld theta = pi * k / n;
        ld w = 1.0L;
        const int half = n / 2;
        for (int j = 1; j <= half; ++j) {
            const ld b = (2 * j == n) ? 1.0L : 2.0L;
            w -= b * std::cos(2.0L * j * theta) / (4.0L * j * j - 1.0L);
        }
        w *= (k == 0 || k == n) ? 1.0L / n : 2.0L / n;
        g.weights[k] = static_cast<double>(0.5L * len * w);
    }

    g.bary.resize(npts);
    for (int k = 0; k <= n; ++k) g.bary[k] = ((k % 2) ? -1.0 : 1.0) * ((k == 0 || k == n) ? 0.5 : 1.0);
    return g;
}

// Barycentric interpolation of nodal values at an arbitrary point.
template <class Values>
double interpolate(const Grid& g, const Values& f, double zeval) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double dz = zeval - g.z[k];
        if (dz == 0.0) return f[k];
        const double t = g.bary[k] / dz;
        num += t * f[k];
        den += t;
    }
    return num / den;
}

} // namespace crestwave::cheb
