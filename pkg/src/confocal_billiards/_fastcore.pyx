# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: quadric evaluation, bounce loop, elliptic coordinates.

Twin of _purecore.py; keep the two files in lockstep (test_core_parity.py
compares them on random inputs).
"""

from libc.math cimport fabs, isnan, nan, sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()

SIM_OK = 0
SIM_NO_FORWARD = 1
SIM_TANGENTIAL = 2


def quadric_value(a, lam, x):
    cdef double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double l = lam
    cdef double s = 0.0
    cdef Py_ssize_t i
    for i in range(av.shape[0]):
        s += xv[i] * xv[i] / (av[i] - l)
    return s - 1.0


def quadric_form(a, lam, x, y):
    cdef double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef double l = lam
    cdef double s = 0.0
    cdef Py_ssize_t i
    for i in range(av.shape[0]):
        s += xv[i] * yv[i] / (av[i] - l)
    return s


def quadric_grad(a, lam, x):
    cdef double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double l = lam
    cdef Py_ssize_t d = av.shape[0]
    out = np.empty(d)
    cdef double[::1] g = out
    cdef Py_ssize_t i
    for i in range(d):
        g[i] = 2.0 * xv[i] / (av[i] - l)
    return out


def intersect_coeffs(a, lam, p, v):
    """Coefficients (A, B, C) of A t^2 + 2 B t + C = 0 along p + t v."""
    cdef double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef double l = lam
    cdef double A = 0.0, B = 0.0, C = -1.0, w
    cdef Py_ssize_t i
    for i in range(av.shape[0]):
        w = 1.0 / (av[i] - l)
        A += vv[i] * vv[i] * w
        B += pv[i] * vv[i] * w
        C += pv[i] * pv[i] * w
    return A, B, C


def reflect_dir(a, lam, x, v):
    """Billiard-reflected direction at x on Q_lam; unit output."""
    cdef double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef double l = lam
    cdef Py_ssize_t d = av.shape[0]
    cdef Py_ssize_t i
    out = np.empty(d)
    cdef double[::1] o = out
    cdef double gg = 0.0, gv = 0.0, c, nrm = 0.0, gi
    for i in range(d):
        gi = 2.0 * xv[i] / (av[i] - l)
        gg += gi * gi
        gv += gi * vv[i]
    c = 2.0 * gv / gg
    for i in range(d):
        o[i] = vv[i] - c * (2.0 * xv[i] / (av[i] - l))
        nrm += o[i] * o[i]
    nrm = sqrt(nrm)
    for i in range(d):
        o[i] /= nrm
    return out


cdef double _forward_t(double[::1] a, double l, double[::1] p, double[::1] v,
                       double tmin) nogil:
    cdef double A = 0.0, B = 0.0, C = -1.0, w, disc, sq, q
    cdef double t1 = nan(""), t2 = nan(""), best = nan("")
    cdef Py_ssize_t i, d = a.shape[0]
    for i in range(d):
        w = 1.0 / (a[i] - l)
        A += v[i] * v[i] * w
        B += p[i] * v[i] * w
        C += p[i] * p[i] * w
    if fabs(A) < 1e-14:
        if fabs(B) > 1e-14:
            t1 = -C / (2.0 * B)
    else:
        disc = B * B - A * C
        if disc < 0.0:
            return nan("")
        sq = sqrt(disc)
        if B >= 0.0:
            q = -(B + sq)
        else:
            q = -(B - sq)
        t1 = q / A
        if q != 0.0:
            t2 = C / q
        else:
            t2 = 0.0
    if t1 > tmin and (isnan(best) or t1 < best):
        best = t1
    if t2 > tmin and (isnan(best) or t2 < best):
        best = t2
    return best


def forward_t(a, lam, p, v, tmin):
    """Smallest parameter t > tmin with p + t v on Q_lam; NaN if none."""
    cdef double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    return _forward_t(av, lam, pv, vv, tmin)


def simulate_fixed(a, lam, x0, v0, n, tmin, grazing_tol):
    """n bounces on the fixed quadric Q_lam.

    Returns (status, k_done, points, dirs) with points/dirs of shape
    (n+1, d); row 0 is the start state, row k the state after bounce k.
    """
    cdef double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef Py_ssize_t d = av.shape[0]
    cdef Py_ssize_t nn = n
    pts = np.zeros((nn + 1, d))
    drs = np.zeros((nn + 1, d))
    cdef double[:, ::1] P = pts
    cdef double[:, ::1] V = drs
    cdef double[::1] x = np.array(x0, dtype=np.float64)
    cdef double[::1] v = np.array(v0, dtype=np.float64)
    cdef double l = lam, tm = tmin, gtol = grazing_tol
    cdef double nrm = 0.0, t, gg, gv, gn, c, gi
    cdef Py_ssize_t i, k
    for i in range(d):
        nrm += v[i] * v[i]
    nrm = sqrt(nrm)
    for i in range(d):
        v[i] /= nrm
        P[0, i] = x[i]
        V[0, i] = v[i]
    for k in range(1, nn + 1):
        t = _forward_t(av, l, x, v, tm)
        if isnan(t):
            return SIM_NO_FORWARD, k - 1, pts, drs
        for i in range(d):
            x[i] = x[i] + t * v[i]
        gg = 0.0
        gv = 0.0
        for i in range(d):
            gi = 2.0 * x[i] / (av[i] - l)
            gg += gi * gi
            gv += gi * v[i]
        gn = sqrt(gg)
        if gn == 0.0 or fabs(gv) / gn <= gtol:
            return SIM_TANGENTIAL, k - 1, pts, drs
        c = 2.0 * gv / gg
        nrm = 0.0
        for i in range(d):
            v[i] = v[i] - c * (2.0 * x[i] / (av[i] - l))
            nrm += v[i] * v[i]
        nrm = sqrt(nrm)
        for i in range(d):
            v[i] /= nrm
            P[k, i] = x[i]
            V[k, i] = v[i]
    return SIM_OK, nn, pts, drs


cdef double _h(double[::1] a, double[::1] x, double t) nogil:
    cdef double s = 0.0
    cdef Py_ssize_t j
    for j in range(a.shape[0]):
        s += x[j] * x[j] / (a[j] - t)
    return s - 1.0


cdef double _dh(double[::1] a, double[::1] x, double t) nogil:
    cdef double s = 0.0, w
    cdef Py_ssize_t j
    for j in range(a.shape[0]):
        w = a[j] - t
        s += x[j] * x[j] / (w * w)
    return s


def elliptic_coords(a, x, guard):
    """Jacobi elliptic coordinates of x; see _purecore.elliptic_coords."""
    cdef double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t d = av.shape[0]
    lam_out = np.empty(d)
    flg_out = np.zeros(d)
    cdef double[::1] lam = lam_out
    cdef double[::1] flags = flg_out
    cdef double g = guard, xx = 0.0
    cdef double lo, hi, left, right, h_left, h_right, t_lo, t_hi, mid, t
    cdef double dh, step, t_new
    cdef Py_ssize_t i, it
    for i in range(d):
        xx += xv[i] * xv[i]
    for i in range(d):
        hi = av[i]
        lo = av[i - 1] if i > 0 else av[0] - xx - 1.0
        left = lo + g if i > 0 else lo
        right = hi - g
        if right <= left:
            lam[i] = hi
            flags[i] = 1.0
            continue
        h_right = _h(av, xv, right)
        if h_right <= 0.0:
            lam[i] = hi
            flags[i] = 1.0
            continue
        h_left = _h(av, xv, left)
        if h_left >= 0.0:
            lam[i] = lo
            flags[i] = 1.0
            continue
        t_lo = left
        t_hi = right
        for it in range(64):
            mid = 0.5 * (t_lo + t_hi)
            if _h(av, xv, mid) < 0.0:
                t_lo = mid
            else:
                t_hi = mid
        t = 0.5 * (t_lo + t_hi)
        for it in range(3):
            dh = _dh(av, xv, t)
            if dh <= 0.0:
                break
            step = _h(av, xv, t) / dh
            t_new = t - step
            if t_new <= t_lo or t_new >= t_hi:
                break
            t = t_new
        lam[i] = t
        if hi - t < 2.0 * g or (i > 0 and t - lo < 2.0 * g):
            flags[i] = 1.0
    return lam_out, flg_out
