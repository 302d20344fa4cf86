"""High-precision caustic pairs in d=3 where the 3x2 rank matrix drops rank.

Pure mpmath, no package imports. The quintic

    P(x) = (a1 - x)(a2 - x)(a3 - x)(alpha1 - x)(alpha2 - x)

has a Taylor square root y = B0 + B1 x + ... at x = 0. Rank deficiency of

    [[B5, B4],
     [B6, B5],
     [B7, B6]]

means the three 2x2 minors vanish; generic solutions form isolated points
in the (alpha1, alpha2) rectangle. Newton on the first two minors from
float64 seeds (scipy scan done separately), verified on the third.

Billiard meaning, measured geometrically: lines tangent to both quadrics
of such a pair close after 8 reflections in the ellipsoid, not 4. The
row-count parameter of the matrix is not the physical period in d=3.

Run: python tools/oracle_cayley_d3.py
"""

import mpmath as mp

mp.mp.dps = 50

A = [mp.mpf(1), mp.mpf(2), mp.mpf(3)]


def poly_coeffs(alphas):
    """Coefficients c[0..5] of P(x) = prod (root - x), ascending order."""
    roots = A + list(alphas)
    c = [mp.mpf(1)]
    for r in roots:
        nxt = [mp.mpf(0)] * (len(c) + 1)
        for i, ci in enumerate(c):
            nxt[i] += r * ci
            nxt[i + 1] -= ci
        c = nxt
    return c


def sqrt_series(c, nterms):
    """Taylor coefficients of sqrt(sum c_k x^k), c[0] > 0."""
    b = [mp.sqrt(c[0])]
    for k in range(1, nterms):
        acc = c[k] if k < len(c) else mp.mpf(0)
        for i in range(1, k):
            acc -= b[i] * b[k - i]
        b.append(acc / (2 * b[0]))
    return b


def minors(alphas):
    b = sqrt_series(poly_coeffs(alphas), 8)
    return [b[5] * b[5] - b[4] * b[6], b[6] * b[6] - b[5] * b[7],
            b[5] * b[6] - b[4] * b[7]]


def proportionality(z):
    """Square system: (B5,B6,B7) = t * (B4,B5,B6), unknowns (a1, a2, t).

    The three 2x2 minors of the rank matrix are algebraically dependent
    (rank <= 1 is codimension 2), so Newton on a minor pair meets a
    near-singular Jacobian. Column proportionality avoids that.
    """
    b = sqrt_series(poly_coeffs(z[:2]), 8)
    t = z[2]
    return [b[5] - t * b[4], b[6] - t * b[5], b[7] - t * b[6]]


def newton3(seed, steps=80):
    b = sqrt_series(poly_coeffs([mp.mpf(seed[0]), mp.mpf(seed[1])]), 8)
    z = [mp.mpf(seed[0]), mp.mpf(seed[1]), b[5] / b[4]]
    h = mp.mpf(10) ** (-25)
    for _ in range(steps):
        f = proportionality(z)
        cols = []
        for j in range(3):
            zp = list(z)
            zp[j] += h
            fp = proportionality(zp)
            cols.append([(fp[i] - f[i]) / h for i in range(3)])
        J = mp.matrix(3, 3)
        for i in range(3):
            for j in range(3):
                J[i, j] = cols[j][i]
        dz = mp.lu_solve(J, mp.matrix(f))
        z = [z[k] - dz[k] for k in range(3)]
        if max(abs(d) for d in dz) < mp.mpf(10) ** (-40):
            break
    return z


SEEDS = [
    (0.974226799, 1.6088349631),
    (0.9866728834, 2.7266949176),
]

if __name__ == "__main__":
    print("# d=3 rank-drop pairs for A =", [str(a) for a in A])
    for seed in SEEDS:
        sol = newton3(seed)
        res = minors(sol[:2])
        print("pair:")
        print("  alpha1 =", mp.nstr(sol[0], 32))
        print("  alpha2 =", mp.nstr(sol[1], 32))
        print("  t      =", mp.nstr(sol[2], 32))
        print("  minors:", " ".join(mp.nstr(r, 3) for r in res))
