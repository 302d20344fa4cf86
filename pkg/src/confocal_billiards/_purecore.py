"""Pure-Python twin of the compiled kernels in _fastcore.pyx.

Same function surface, same algorithms, plain Python loops. Selected by
core.py when the extension is unavailable or CONFOCAL_BILLIARDS_PURE is set.
All functions take/return plain floats and numpy arrays and signal failure
through status codes; typed exceptions are raised by the wrapping modules.
"""

import math

import numpy as np

# simulate_fixed status codes
SIM_OK = 0
SIM_NO_FORWARD = 1
SIM_TANGENTIAL = 2


def quadric_value(a, lam, x):
    s = 0.0
    for i in range(len(a)):
        s += x[i] * x[i] / (a[i] - lam)
    return s - 1.0


def quadric_form(a, lam, x, y):
    s = 0.0
    for i in range(len(a)):
        s += x[i] * y[i] / (a[i] - lam)
    return s


def quadric_grad(a, lam, x):
    d = len(a)
    g = np.empty(d)
    for i in range(d):
        g[i] = 2.0 * x[i] / (a[i] - lam)
    return g


def intersect_coeffs(a, lam, p, v):
    """Coefficients (A, B, C) of A t^2 + 2 B t + C = 0 along p + t v."""
    A = 0.0
    B = 0.0
    C = -1.0
    for i in range(len(a)):
        w = 1.0 / (a[i] - lam)
        A += v[i] * v[i] * w
        B += p[i] * v[i] * w
        C += p[i] * p[i] * w
    return A, B, C


def reflect_dir(a, lam, x, v):
    """Billiard-reflected direction at x on Q_lam; unit output."""
    d = len(a)
    g = quadric_grad(a, lam, x)
    gg = 0.0
    gv = 0.0
    for i in range(d):
        gg += g[i] * g[i]
        gv += g[i] * v[i]
    c = 2.0 * gv / gg
    out = np.empty(d)
    nrm = 0.0
    for i in range(d):
        out[i] = v[i] - c * g[i]
        nrm += out[i] * out[i]
    nrm = math.sqrt(nrm)
    for i in range(d):
        out[i] /= nrm
    return out


def forward_t(a, lam, p, v, tmin):
    """Smallest parameter t > tmin with p + t v on Q_lam; NaN if none."""
    A, B, C = intersect_coeffs(a, lam, p, v)
    ts = []
    if abs(A) < 1e-14:
        if abs(B) > 1e-14:
            ts.append(-C / (2.0 * B))
    else:
        disc = B * B - A * C
        if disc < 0.0:
            return math.nan
        sq = math.sqrt(disc)
        # stable quadratic roots: avoid subtracting nearly equal quantities
        if B >= 0.0:
            q = -(B + sq)
        else:
            q = -(B - sq)
        ts.append(q / A)
        if q != 0.0:
            ts.append(C / q)
        else:
            ts.append(0.0)
    best = math.nan
    for t in ts:
        if t > tmin and (math.isnan(best) or t < best):
            best = t
    return best


def simulate_fixed(a, lam, x0, v0, n, tmin, grazing_tol):
    """n bounces on the fixed quadric Q_lam.

    Returns (status, k_done, points, dirs) with points/dirs of shape
    (n+1, d); row 0 is the start state, row k the state after bounce k.
    """
    d = len(a)
    points = np.zeros((n + 1, d))
    dirs = np.zeros((n + 1, d))
    x = np.array(x0, dtype=float)
    v = np.array(v0, dtype=float)
    nrm = math.sqrt(float(np.dot(v, v)))
    for i in range(d):
        v[i] /= nrm
    points[0] = x
    dirs[0] = v
    for k in range(1, n + 1):
        t = forward_t(a, lam, x, v, tmin)
        if math.isnan(t):
            return SIM_NO_FORWARD, k - 1, points, dirs
        for i in range(d):
            x[i] = x[i] + t * v[i]
        g = quadric_grad(a, lam, x)
        gg = 0.0
        gv = 0.0
        for i in range(d):
            gg += g[i] * g[i]
            gv += g[i] * v[i]
        gn = math.sqrt(gg)
        if gn == 0.0 or abs(gv) / gn <= grazing_tol:
            return SIM_TANGENTIAL, k - 1, points, dirs
        c = 2.0 * gv / gg
        nrm = 0.0
        for i in range(d):
            v[i] = v[i] - c * g[i]
            nrm += v[i] * v[i]
        nrm = math.sqrt(nrm)
        for i in range(d):
            v[i] /= nrm
        points[k] = x
        dirs[k] = v
    return SIM_OK, n, points, dirs


def _ecoord_h(a, x, lam):
    s = 0.0
    for j in range(len(a)):
        s += x[j] * x[j] / (a[j] - lam)
    return s - 1.0


def _ecoord_dh(a, x, lam):
    s = 0.0
    for j in range(len(a)):
        w = a[j] - lam
        s += x[j] * x[j] / (w * w)
    return s


def elliptic_coords(a, x, guard):
    """Jacobi elliptic coordinates of x.

    The d roots of prod(a_j - t) - sum_i x_i^2 prod_{j!=i}(a_j - t)
    interlace the a_j; on each open interval the rational form
    h(t) = sum x_i^2/(a_i - t) - 1 is strictly increasing, so each root is
    bracketed and bisection cannot fail. Roots within `guard` of an
    endpoint are snapped to it and flagged.

    Returns (lam, flags) with lam ascending, flags 1.0 where lam hits some a_j.
    """
    d = len(a)
    lam = np.empty(d)
    flags = np.zeros(d)
    xx = 0.0
    for i in range(d):
        xx += x[i] * x[i]
    for i in range(d):
        hi = a[i]
        lo = a[i - 1] if i > 0 else a[0] - xx - 1.0
        left = lo + guard if i > 0 else lo
        right = hi - guard
        if right <= left:
            lam[i] = hi
            flags[i] = 1.0
            continue
        h_right = _ecoord_h(a, x, right)
        if h_right <= 0.0:
            # no sign change before the pole: root sits at the endpoint a_i
            lam[i] = hi
            flags[i] = 1.0
            continue
        h_left = _ecoord_h(a, x, left)
        if h_left >= 0.0:
            lam[i] = lo
            flags[i] = 1.0
            continue
        t_lo = left
        t_hi = right
        for _ in range(64):
            mid = 0.5 * (t_lo + t_hi)
            if _ecoord_h(a, x, mid) < 0.0:
                t_lo = mid
            else:
                t_hi = mid
        t = 0.5 * (t_lo + t_hi)
        for _ in range(3):
            dh = _ecoord_dh(a, x, t)
            if dh <= 0.0:
                break
            step = _ecoord_h(a, x, t) / dh
            t_new = t - step
            if t_new <= t_lo or t_new >= t_hi:
                break
            t = t_new
        lam[i] = t
        if hi - t < 2.0 * guard or (i > 0 and t - lo < 2.0 * guard):
            flags[i] = 1.0
    return lam, flags
