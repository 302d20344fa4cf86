"""Closure conditions of Cayley type and numerical caustic search.

Everything here revolves around the odd-degree polynomial

    P(x) = (a_1 - x) ... (a_d - x) (alpha_1 - x) ... (alpha_{d-1} - x)

built from the family and a caustic set. Periodicity of a billiard
trajectory with those caustics, and more generally existence of s-weak
chains, is equivalent to rank drops of Hankel-type matrices filled with
Taylor coefficients B_k of sqrt(P) about a regular point of the curve
y^2 = P(x). The caustic search inverts the closure condition
numerically and is the oracle the rank conditions are tested against.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .confocal import ConfocalFamily, tangent_directions
from .errors import (
    BranchPoint,
    InvalidSkew,
    NoSignChange,
    SearchFailed,
    ValidationError,
)
from .trajectory import closure_gap, simulate

RANK_REL_THRESHOLD = 1e-8


@dataclass(frozen=True)
class PPoly:
    """Coefficients of P(x), stored low-to-high; degree exactly 2d-1."""

    coef: tuple

    def __post_init__(self):
        object.__setattr__(self, "coef", tuple(float(c) for c in self.coef))
        if len(self.coef) % 2 != 0 or len(self.coef) < 4:
            raise ValidationError("P must have odd degree 2d-1 with d >= 2")

    @property
    def degree(self):
        return len(self.coef) - 1

    def __call__(self, x):
        return npoly.polyval(x, np.asarray(self.coef))

    @property
    def scale(self):
        return max(1.0, max(abs(c) for c in self.coef))


def _alpha_tuple(C):
    return tuple(C.alpha) if hasattr(C, "alpha") else tuple(float(v) for v in C)


def build_P(F, C):
    """P(x) as the exact product over family and caustic parameters."""
    alphas = _alpha_tuple(C)
    if len(alphas) != F.d - 1:
        raise ValidationError(f"need {F.d - 1} caustic parameters, got {len(alphas)}")
    coef = np.array([1.0])
    for root in list(F.a) + list(alphas):
        coef = npoly.polymul(coef, np.array([root, -1.0]))
    return PPoly(tuple(coef))


def sqrt_taylor(P, x0, N):
    """Taylor coefficients B_0 ... B_N of sqrt(P) about x0, B_0 = +sqrt(P(x0)).

    Matching coefficients in (sum B_k t^k)^2 = P(x0 + t) gives
    B_n = (p_n - sum_{j=1}^{n-1} B_j B_{n-j}) / (2 B_0).
    """
    shifted = _shift_coeffs(np.asarray(P.coef), x0)
    p0 = float(shifted[0])
    if p0 <= 1e-12 * P.scale:
        raise BranchPoint(f"P({x0}) = {p0:.3e} is not positive; branch point of y^2 = P")
    p = np.zeros(N + 1)
    take = min(N + 1, len(shifted))
    p[:take] = shifted[:take]
    B = np.zeros(N + 1)
    B[0] = math.sqrt(p0)
    for n in range(1, N + 1):
        acc = 0.0
        for j in range(1, n):
            acc += B[j] * B[n - j]
        B[n] = (p[n] - acc) / (2.0 * B[0])
    return B


def _shift_coeffs(coef, x0):
    """Coefficients of x -> P(x0 + x) via polynomial composition."""
    poly = np.polynomial.Polynomial(np.asarray(coef, dtype=float))
    return poly(np.polynomial.Polynomial([x0, 1.0])).coef


def numerical_rank(M, rel_threshold=RANK_REL_THRESHOLD):
    """(rank, singular values) with a relative cutoff and an absolute floor."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0, ()
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] < 1e-14:
        return 0, tuple(float(v) for v in s)
    rank = int(np.count_nonzero(s > rel_threshold * s[0]))
    return rank, tuple(float(v) for v in s)


def _normalized_det(M):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        return None
    norms = np.linalg.norm(M, axis=1)
    if np.any(norms < 1e-300):
        return 0.0
    return float(np.linalg.det(M) / np.prod(norms))


@dataclass(frozen=True)
class CayleyReport:
    """Outcome of a rank-drop closure test."""

    kind: str  # "periodic" or "weak"
    parameters: tuple  # (n,) or (r, s)
    expansion_point: float
    B: tuple
    matrix: tuple  # rows of the tested matrix
    shape: tuple
    singular_values: tuple
    numerical_rank: int
    threshold_rank: int
    satisfied: bool
    normalized_det: float | None


def _finish_report(kind, parameters, x0, B, M, threshold, rel_threshold):
    rank, svals = numerical_rank(M, rel_threshold)
    return CayleyReport(
        kind=kind,
        parameters=parameters,
        expansion_point=float(x0),
        B=tuple(float(b) for b in B),
        matrix=tuple(tuple(float(v) for v in row) for row in np.asarray(M)),
        shape=tuple(int(v) for v in np.asarray(M).shape),
        singular_values=svals,
        numerical_rank=rank,
        threshold_rank=int(threshold),
        satisfied=bool(rank < threshold),
        normalized_det=_normalized_det(M),
    )


def _periodic_matrix(B, n, d):
    rows, cols = n - 1, n - d + 1
    M = np.empty((rows, cols))
    for i in range(1, rows + 1):
        for j in range(cols):
            M[i - 1][j] = B[n + i - j]
    return M


def cayley_periodic(F, C, n, x0=0.0, rel_threshold=RANK_REL_THRESHOLD):
    """Rank test for an n-periodic trajectory with caustic set C (n >= d).

    The tested matrix is (n-1) x (n-d+1) with rows
    (B_{n+1} ... B_{d+1}), ..., (B_{2n-1} ... B_{n+d-1}); the condition
    holds iff its rank is below n-d+1.
    """
    d = F.d
    if n < d:
        raise ValidationError(f"period n = {n} must be at least d = {d}")
    P = build_P(F, C)
    B = sqrt_taylor(P, x0, 2 * n)
    M = _periodic_matrix(B, n, d)
    return _finish_report("periodic", (int(n),), x0, B, M, n - d + 1, rel_threshold)


def cayley_weak(F, C, r, s, x0, rel_threshold=RANK_REL_THRESHOLD):
    """Rank test for an s-weak chain of length r, expanded about x0.

    For s = -1 the condition family coincides with the periodic one,
    and the report carries the identical matrix (built about x0). For
    0 <= s <= d-2 the matrix has the two parity-dependent Hankel shapes
    in terms of m, where r+s+1 = 2m or 2m+1:

        even:  (m-s-2) x (m-d+1), entries B_{d+1+i+j}
        odd:   (m-s-1) x (m-d+2), entries B_{d+i+j}

    A non-positive column count means the condition cannot hold on a
    smooth curve and the report says so.
    """
    d = F.d
    if not (-1 <= s <= d - 2):
        raise InvalidSkew(f"s = {s} outside [-1, {d - 2}]")
    if r < 1:
        raise ValidationError("chain length r must be positive")
    P = build_P(F, C)
    if s == -1:
        B = sqrt_taylor(P, x0, 2 * r)
        M = _periodic_matrix(B, r, d)
        return _finish_report("weak", (int(r), -1), x0, B, M, r - d + 1, rel_threshold)
    B = sqrt_taylor(P, x0, r + s + 2)
    total = r + s + 1
    m = total // 2
    if total % 2 == 0:
        rows, cols = m - s - 2, m - d + 1
        offset = d + 1
    else:
        rows, cols = m - s - 1, m - d + 2
        offset = d
    rows = max(rows, 0)
    cols = max(cols, 0)
    M = np.empty((rows, cols))
    for i in range(rows):
        for j in range(cols):
            M[i][j] = B[offset + i + j]
    return _finish_report("weak", (int(r), int(s)), x0, B, M, cols, rel_threshold)


def _default_boundary_point(F):
    # a fixed generic boundary point: scaled direction projected onto Q_0
    seed = np.array([0.41, -0.57, 0.63, -0.49][: F.d])
    u = seed / np.linalg.norm(seed)
    return np.sqrt(F.arr) * u


def _state_gap_vector(F, traj, n):
    dx = (traj.point(n) - traj.point(0)) / F.length_scale
    dv = traj.direction(n) - traj.direction(0)
    return np.concatenate([dx, dv])


def caustic_search(
    F,
    n,
    caustic_bracket,
    fixed_caustics=None,
    samples=32,
    start_point=None,
    branch=0,
    bisect_tol=1e-12,
    closure_tol=1e-7,
):
    """Caustic parameter closing an n-bounce orbit, by bisection.

    For d = 2 the single caustic is varied over the bracket. For d = 3
    fixed_caustics must hold d-1 entries with exactly one None marking
    the varied slot. The closure functional is the start-to-end state
    difference projected on a frozen unit vector, which changes sign at
    a simple closure; the returned value is verified to close the orbit
    within closure_tol.
    """
    d = F.d
    if fixed_caustics is None:
        if d != 2:
            raise ValidationError("fixed_caustics is required for d > 2")
        slots = [None]
    else:
        slots = list(fixed_caustics)
        if len(slots) != d - 1 or sum(1 for v in slots if v is None) != 1:
            raise ValidationError("fixed_caustics needs d-1 entries with exactly one None")
    vary = slots.index(None)
    x_b = _default_boundary_point(F) if start_point is None else np.asarray(start_point, float)
    lo, hi = float(caustic_bracket[0]), float(caustic_bracket[1])
    if not lo < hi:
        raise ValidationError("empty caustic bracket")

    grad0 = 2.0 * x_b / F.arr
    tracked = {"dir": None}

    def launch(alpha):
        alphas = list(slots)
        alphas[vary] = alpha
        dirs = tangent_directions(F, x_b, alphas)
        if not dirs:
            return None
        if tracked["dir"] is None:
            v = dirs[min(branch, len(dirs) - 1)]
        else:
            v = max(dirs, key=lambda u: abs(float(np.dot(u, tracked["dir"]))))
        if float(np.dot(v, tracked["dir"] if tracked["dir"] is not None else -grad0)) < 0.0:
            v = -v
        if float(np.dot(v, grad0)) > 0.0:
            # keep the launch pointing into the ellipsoid
            v = -v
        tracked["dir"] = v
        return v

    def gap_vec(alpha):
        v = launch(alpha)
        if v is None:
            return None
        traj = simulate(F, x_b, v, n)
        return _state_gap_vector(F, traj, n)

    grid = np.linspace(lo, hi, samples + 1)
    gaps = [gap_vec(float(t)) for t in grid]

    def bisect_within(blo, bhi, w, glo):
        for _ in range(200):
            if bhi - blo < bisect_tol:
                break
            mid = 0.5 * (blo + bhi)
            gv = gap_vec(mid)
            if gv is None:
                return None
            gm = float(np.dot(w, gv))
            if glo * gm <= 0.0:
                bhi = mid
            else:
                blo, glo = mid, gm
        return 0.5 * (blo + bhi)

    # Freeze the projection direction per subinterval: at the left end the
    # projected gap equals |gap| > 0, so a sign flip at the right end
    # brackets a crossing. Spurious flips (the gap vector merely rotating)
    # are weeded out by the closure verification below.
    saw_flip = False
    for i in range(len(grid) - 1):
        gl, gr = gaps[i], gaps[i + 1]
        if gl is None or gr is None:
            continue
        norm_l = float(np.linalg.norm(gl))
        if norm_l == 0.0:
            return float(grid[i])
        w = gl / norm_l
        if float(np.dot(w, gr)) >= 0.0:
            continue
        saw_flip = True
        alpha_star = bisect_within(float(grid[i]), float(grid[i + 1]), w, norm_l)
        if alpha_star is None:
            continue
        v = launch(alpha_star)
        traj = simulate(F, x_b, v, n)
        if closure_gap(traj, n) < closure_tol:
            return alpha_star
    if saw_flip:
        raise SearchFailed(f"sign changes in ({lo}, {hi}) did not verify as closures for n = {n}")
    raise NoSignChange(f"no closure in ({lo}, {hi}) for n = {n}")
