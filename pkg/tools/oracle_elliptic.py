"""Independent values for elliptic coordinates and line caustics.

Solves the defining equations symbolically with sympy (exact rational
arithmetic until the final 40-digit evaluation) so the package's
numerical routines can be tested against an implementation that shares
no code with them. Run and freeze the printed block into
tests/_oracle_values.py.
"""

import sympy as sp

A = (sp.Integer(1), sp.Integer(2), sp.Integer(3))
lam = sp.Symbol("lam")


def coord_roots(point):
    expr = sum(sp.Rational(x) ** 2 / (a - lam) for x, a in zip(point, A)) - 1
    poly = sp.Poly(sp.together(expr).as_numer_denom()[0], lam)
    roots = sorted(r for r in poly.real_roots())
    return [sp.N(r, 40) for r in roots]


def caustic_roots(p, v):
    p = [sp.Rational(c) for c in p]
    v = [sp.Rational(c) for c in v]
    c = [1 / (a - lam) for a in A]
    fv = sum(ci * vi**2 for ci, vi in zip(c, v))
    fx = sum(ci * pi**2 for ci, pi in zip(c, p)) - 1
    fxv = sum(ci * pi * vi for ci, pi, vi in zip(c, p, v))
    expr = fxv**2 - fv * fx
    poly = sp.Poly(sp.together(expr).as_numer_denom()[0], lam)
    roots = sorted(r for r in poly.real_roots())
    kept = []
    for r in roots:
        # the numerator can pick up factors from clearing denominators;
        # keep only genuine tangency parameters
        if expr.subs(lam, r).simplify() == 0:
            kept.append(sp.N(r, 40))
    return kept


def main():
    point = (sp.Rational(3, 10), sp.Rational(-9, 20), sp.Rational(11, 20))
    print("# point", tuple(map(str, point)))
    print("ELLIPTIC_COORDS_D3 =", tuple(float(r) for r in coord_roots(point)))

    p = (sp.Rational(1, 5), sp.Rational(-3, 10), sp.Rational(2, 5))
    v_raw = (sp.Integer(3), sp.Integer(1), sp.Integer(-2))
    print("# line point", tuple(map(str, p)), "direction", tuple(map(str, v_raw)), "(unnormalized)")
    roots = caustic_roots(p, v_raw)
    print("CAUSTICS_LINE_D3 =", tuple(float(r) for r in roots))
    for r in roots:
        print("#   40 digits:", r)


if __name__ == "__main__":
    main()
