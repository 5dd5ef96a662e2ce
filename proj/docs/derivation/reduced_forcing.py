"""Symbolic derivation of the order-e^{-5q/2} reduced problem and of lambda.

Route A: substitute the forced solution (U*, V*) and the leading surface
angle xi~ into the exact first-order (Phi, Psi) system and the Bernoulli
remainder, keep the e^{-5q/2} coefficients F1, F2, F3, and solve
    d'' + (25/9) d = (2/3) F2 - (10/9) F1,  d'(0) = 0,  d'(pi/2) - d(pi/2)/sqrt3 = F3.
Then lambda omega1^2 = d(pi/2).

Route B: expand the flattened (psi_bar, zeta) system directly in powers of
E = e^{-q/2} and fix the e^{-q} coefficient of xi from the Bernoulli
condition at order E^8.

Both routes print lambda; the C++ tests freeze F1, F2, F3 and lambda from here.
Run: python3 reduced_forcing.py   (needs sympy)
"""
import sympy as sp

q, z, w = sp.symbols('q z omega1', real=True)
eps = sp.symbols('eps', positive=True)
pi, s3 = sp.pi, sp.sqrt(3)


def coef(expr, k):
    """Coefficient of e^{-k q} in expr (expr expanded in e^{-q/2})."""
    e = (expr * sp.exp(k * q)).subs(q, -2 * sp.log(eps))
    return sp.simplify(sp.series(sp.simplify(e), eps, 0, 1).removeO())


def route_a():
    Ub = sp.Rational(2, 3) * sp.exp(-sp.Rational(3, 2) * q) * sp.cos(z)
    Us = sp.Rational(1, 12) * (3 - 2 * sp.cos(4 * z / 3)) * w * sp.exp(-2 * q)
    Vs = sp.Rational(2, 3) * Us.diff(q)
    xi = w / 3 * sp.exp(-q / 2)
    xiq = xi.diff(q)
    Phi, Psi = Us, Vs
    den = pi + 3 * xi
    N1 = (-sp.Rational(9, 2) / den * Psi * xi
          + 3 * z / (pi * den) * (sp.Rational(9, 2) * Ub.diff(z) * xi**2 - 3 * z * Ub * xi * xiq)
          + 3 * z / den * Phi.diff(z) * xiq)
    # omega_hat(psi_bar) -> omega1: the Taylor remainder is O(e^{-7q/2}).
    N2 = (2 * w * den / (3 * pi) * sp.exp(-2 * q)
          - sp.Rational(27, 2) / (pi * den) * (Ub + z * Ub.diff(z)) * xi**2
          + 3 * xiq * (z * Psi).diff(z) / den
          - 9 * z * (z * Ub).diff(z, 2) / (pi * den) * xi * xiq
          + 9 * Phi.diff(z, 2) * xi / (2 * den))
    # The e^{-2q} forcing (2/3) omega1 is the source of U* itself.
    N2 = N2 - sp.Rational(2, 3) * w * sp.exp(-2 * q)
    F1 = coef(N1, sp.Rational(5, 2))
    F2 = coef(N2, sp.Rational(5, 2))

    # Bernoulli condition at the surface in terms of Phi_z, Psi, xi.
    Pz, Ps, x = sp.symbols('Pz Ps x')
    zeta = -pi / 6 + x
    Uz, Uq = Ub.diff(z), Ub.diff(q)
    psib_z = Uz + Pz + 3 / pi * (z * Uz).diff(z) * x
    Psih = sp.Rational(2, 3) * Uq + Ps - 3 / pi * (z * Ub).diff(z) * x
    B = sp.expand((Psih**2 + psib_z**2
                   + 2 * ((zeta + pi / 2) / (pi / 2))**2 * sp.exp(-3 * q) * sp.sin(zeta)).subs(z, pi / 2))
    zero = {Pz: 0, Ps: 0, x: 0}
    lin = sum(sp.diff(B, v).subs(zero) * v for v in (Pz, Ps, x))
    assert sp.simplify(B.subs(zero)) == 0
    R = sp.simplify(B - lin - B.subs(zero))
    # Linear part is -(4/3) e^{-3q/2} (Phi_z - Phi/sqrt3), so Phi_z - Phi/sqrt3 = (3/4) e^{3q/2} R.
    N3 = sp.Rational(3, 4) * sp.exp(sp.Rational(3, 2) * q) * R
    F3 = coef(N3.subs({Pz: Us.diff(z).subs(z, pi / 2), Ps: Vs.subs(z, pi / 2), x: xi}), sp.Rational(5, 2))

    d = sp.Function('d')
    sig = sp.Rational(5, 2)
    rhs = sp.Rational(2, 3) * (F2 - sp.Rational(2, 3) * sig * F1)
    sol = sp.dsolve(sp.Eq(d(z).diff(z, 2) + sp.Rational(4, 9) * sig**2 * d(z), rhs)).rhs
    cs = sorted(sol.free_symbols - {z, w}, key=str)
    S = sp.solve([sol.diff(z).subs(z, 0), (sol.diff(z) - sol / s3).subs(z, pi / 2) - F3], cs, dict=True)[0]
    sol = sp.simplify(sol.subs(S))
    return F1, F2, F3, sol


def route_b():
    E, b = sp.symbols('E b')

    def dq(expr):
        poly = sp.Poly(sp.expand(expr), E)
        return sum(-sp.Rational(k, 2) * c * E**k for (k,), c in poly.terms())

    def trunc(e, n):
        return sp.expand(sp.series(e, E, 0, n + 1).removeO())

    a = w / 3
    p4 = w * (-8 * z * sp.sin(z) - pi * (2 * sp.cos(4 * z / 3) - 3)) / (12 * pi)

    def system(p5):
        psi = E**3 * sp.Rational(2, 3) * sp.cos(z) + E**4 * p4 + E**5 * p5
        xi = a * E + b * E**2
        zeta = -pi / 6 + xi
        den = zeta + pi / 2
        A, c = (pi / 2) / den, z * dq(xi) / den
        G = trunc(dq(psi) - c * sp.diff(psi, z), 6)
        interior = trunc(dq(G) - c * sp.diff(G, z) + A**2 * sp.diff(psi, z, 2) - E**4 * w, 5)
        bern = trunc(G**2 + A**2 * sp.diff(psi, z)**2 + 2 * E**6 * sp.sin(zeta), 8)
        return interior, bern

    P5 = sp.Function('P5')(z)
    interior, _ = system(P5)
    assert sp.simplify(interior.coeff(E, 4)) == 0
    p5 = sp.dsolve(sp.Eq(sp.simplify(interior.coeff(E, 5)), 0), P5).rhs
    cs = sorted(p5.free_symbols - {z, w, b}, key=str)
    p5 = sp.simplify(p5.subs(sp.solve([sp.diff(p5, z).subs(z, 0), p5.subs(z, pi / 2)], cs, dict=True)[0]))
    _, bern = system(p5)
    return sp.solve(sp.simplify(bern.coeff(E, 8).subs(z, pi / 2)), b), p5


if __name__ == '__main__':
    F1, F2, F3, d = route_a()
    print('F1 =', F1)
    print('F2 =', F2)
    print('F3 =', F3, '=', sp.N(F3 / w**2, 16), '* omega1^2')
    print('d(z) =', d)
    lam_a = sp.simplify(d.subs(z, pi / 2) / w**2)
    print('route A lambda =', lam_a, '=', sp.N(lam_a, 16))
    bs, p5 = route_b()
    print('route B lambda =', [sp.simplify(v / w**2) for v in bs])
