"""High-precision caustic parameters of closed plane orbits, a = (1, 2).

Pure mpmath billiard: reflect a tangent chord n times and bisect the
caustic parameter until the orbit closes. Shares no code with the
package; 40-digit working precision, results good to ~30 digits. The
printed dict is frozen into tests/_oracle_values.py.
"""

import mpmath as mp

mp.mp.dps = 40

A = (mp.mpf(1), mp.mpf(2))


def boundary_point(phi):
    return mp.matrix([mp.sqrt(A[0]) * mp.cos(phi), mp.sqrt(A[1]) * mp.sin(phi)])


def boundary_angle(x):
    return mp.atan2(x[1] / mp.sqrt(A[1]), x[0] / mp.sqrt(A[0]))


def tangent_dirs(x, alpha):
    # tangency of x + t v to Q_alpha: (sum c x v)^2 = (sum c v^2)(sum c x^2 - 1)
    c = [1 / (a - alpha) for a in A]
    fx = c[0] * x[0] ** 2 + c[1] * x[1] ** 2 - 1
    # quadratic in the slope u = v2/v1
    qa = c[1] ** 2 * x[1] ** 2 - c[1] * fx
    qb = 2 * c[0] * c[1] * x[0] * x[1]
    qc = c[0] ** 2 * x[0] ** 2 - c[0] * fx
    disc = qb * qb - 4 * qa * qc
    if disc < 0:
        return []
    out = []
    for sgn in (1, -1):
        u = (-qb + sgn * mp.sqrt(disc)) / (2 * qa)
        n = mp.sqrt(1 + u * u)
        out.append(mp.matrix([1 / n, u / n]))
    return out


def reflect(x, v):
    g = mp.matrix([2 * x[0] / A[0], 2 * x[1] / A[1]])
    gn = mp.sqrt(g[0] ** 2 + g[1] ** 2)
    g = g / gn
    d = v[0] * g[0] + v[1] * g[1]
    return mp.matrix([v[0] - 2 * d * g[0], v[1] - 2 * d * g[1]])


def step(x, v):
    # second root of sum (x + t v)^2 / a = 1 given x is on the boundary
    qa = v[0] ** 2 / A[0] + v[1] ** 2 / A[1]
    qb = x[0] * v[0] / A[0] + x[1] * v[1] / A[1]
    t = -2 * qb / qa
    return mp.matrix([x[0] + t * v[0], x[1] + t * v[1]])


def orbit_gap(alpha, n, phi0):
    x = boundary_point(phi0)
    dirs = tangent_dirs(x, alpha)
    if not dirs:
        return None
    v = dirs[0]
    x0, v0 = x, v
    for _ in range(n):
        x = step(x, v)
        v = reflect(x, v)
    dphi = boundary_angle(x) - boundary_angle(x0)
    while dphi > mp.pi:
        dphi -= 2 * mp.pi
    while dphi <= -mp.pi:
        dphi += 2 * mp.pi
    state = max(abs(x[0] - x0[0]), abs(x[1] - x0[1]), abs(v[0] - v0[0]), abs(v[1] - v0[1]))
    return dphi, state


def find_alpha(n, lo, hi, phi0=mp.mpf(3) / 10):
    lo, hi = mp.mpf(lo), mp.mpf(hi)
    flo = orbit_gap(lo, n, phi0)[0]
    for _ in range(220):
        mid = (lo + hi) / 2
        fmid = orbit_gap(mid, n, phi0)[0]
        if flo * fmid <= 0:
            hi = mid
        else:
            lo, flo = mid, fmid
        if hi - lo < mp.mpf(10) ** (-36):
            break
    alpha = (lo + hi) / 2
    _, state = orbit_gap(alpha, n, phi0)
    return alpha, state


def main():
    brackets = {
        3: ("0.92", "0.94"),
        4: ("0.66", "0.68"),
        5: ("0.46", "0.48"),
        6: ("0.335", "0.35"),
        7: ("0.25", "0.27"),
    }
    print("ALPHA_STAR_D2 = {")
    for n, (lo, hi) in brackets.items():
        alpha, state = find_alpha(n, lo, hi)
        print(f"    {n}: {mp.nstr(alpha, 30)},  # closure gap {mp.nstr(state, 3)}")
    print("}")


if __name__ == "__main__":
    main()
