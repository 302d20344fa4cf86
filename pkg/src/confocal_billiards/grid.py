"""Poncelet-Darboux grids of billiard trajectories in the plane.

Intersection points of trajectory segments, collected by index
difference (P_k) or index sum (Q_k), lie on a single conic confocal
with the boundary; which type of conic is determined by the caustic
type together with the winding relation of the two trajectories, or
with the parity of k. The same machinery covers the two-trajectory
form a_m x b_m. In dimension three the intersection points are
replaced by the s-skew relation: the pairs (a_m, b_m) share one skew
class and one multiset of connecting quadrics for all m.

Index convention: segment 0 is the initial segment; P_k uses pairs
with i - j = k >= 1 and Q_k pairs with i + j = k >= 1, i != j.
"""
import math
from dataclasses import dataclass, replace

import numpy as np

from . import core
from .confocal import as_point, elliptic_coordinates
from .errors import (
    CausticMismatch,
    DegenerateCaustic,
    EmptyGrid,
    NoFit,
    ValidationError,
)
from .algebra3d import s_skew

FIT_GATE = 1e-4  # fits worse than this are theorem violations, not noise


@dataclass(frozen=True)
class GridSet:
    """Intersection points of one grid family, with optional fit data."""

    k: int
    mode: str  # "difference" or "sum"
    points: tuple
    fitted_lambda: float = None
    residual: float = None
    conic_type: str = None
    skipped_parallel: int = 0

    def with_conic(self, lam, residual, conic_type):
        return replace(
            self, fitted_lambda=float(lam), residual=float(residual), conic_type=conic_type
        )


def _seg_line(traj, idx):
    p = traj.point(idx)
    v = traj.direction(idx)
    return np.asarray(p, dtype=float), np.asarray(v, dtype=float)


def _cross2(u, v):
    return u[0] * v[1] - u[1] * v[0]


def line_intersection_2d(p1, v1, p2, v2, parallel_tol=1e-8):
    """Meet of two supporting lines, or None when |sin angle| < tol."""
    den = _cross2(v1, v2)
    sin_angle = abs(den) / (np.linalg.norm(v1) * np.linalg.norm(v2))
    if sin_angle < parallel_tol:
        return None
    t = _cross2(p2 - p1, v2) / den
    return p1 + t * v1


def _check_same_caustic(t1, t2, tol=1e-8):
    c1 = np.asarray(t1.caustics.alpha)
    c2 = np.asarray(t2.caustics.alpha)
    gap = float(np.max(np.abs(c1 - c2)))
    if gap > tol:
        raise CausticMismatch(f"trajectories have different caustics (gap {gap:.3e})")


def collect_grid(t1, t2=None, k=1, mode="difference"):
    """Grid points of one or two trajectories sharing a caustic.

    With one trajectory: P_k (mode="difference", points l_{j+k} x l_j)
    or Q_k (mode="sum", points l_i x l_j over i + j = k, i != j). With
    two trajectories: points a_m x b_{m+k}, any k >= 0. Pairs of nearly
    parallel segments are counted in skipped_parallel, not fitted.
    """
    if mode not in ("difference", "sum"):
        raise ValidationError(f"unknown grid mode {mode!r}")
    F = t1.F
    if F.d != 2:
        raise ValidationError("grids collect segment intersections in the plane only")
    two = t2 is not None and t2 is not t1
    if two:
        _check_same_caustic(t1, t2)
    else:
        t2 = t1
        if k < 1:
            raise ValidationError("single-trajectory grids need k >= 1")

    pairs = []
    n1, n2 = t1.n, t2.n
    if two:
        for m in range(0, n1 + 1):
            if 0 <= m + k <= n2:
                pairs.append((m, m + k))
    elif mode == "difference":
        for j in range(0, n1 - k + 1):
            pairs.append((j + k, j))
    else:
        for i in range(max(0, k - n1), (k + 1) // 2):
            j = k - i
            if j <= n1:
                pairs.append((i, j))

    points = []
    skipped = 0
    for i, j in pairs:
        p1, v1 = _seg_line(t1, i)
        p2, v2 = _seg_line(t2, j)
        w = line_intersection_2d(p1, v1, p2, v2)
        if w is None:
            skipped += 1
            continue
        points.append(w)
    if not points:
        raise EmptyGrid(
            f"no usable intersections for k={k}, mode={mode} "
            f"({len(pairs)} index pairs, {skipped} parallel)"
        )
    return GridSet(k=int(k), mode=mode, points=tuple(points), skipped_parallel=skipped)


def _membership_defect(F, lam, points):
    return max(abs(core.quadric_value(F.arr, lam, p)) for p in points)


def _sum_sq(F, lam, points):
    return sum(core.quadric_value(F.arr, lam, p) ** 2 for p in points)


def fit_confocal(F, points, gate=FIT_GATE):
    """Confocal parameter of the single conic through the points.

    Each point lies on one ellipse and one hyperbola of the family (its
    two elliptic coordinates); a common conic must appear in the same
    band for every point, so the candidate lambdas are the per-band
    medians, polished by a golden-section pass on the sum of squared
    membership defects. The returned residual is the worst absolute
    defect; above the gate the fit is refused.
    """
    if F.d != 2:
        raise ValidationError("confocal conic fitting is a plane operation")
    points = [as_point(p, 2) for p in points]
    if len(points) < 2:
        raise ValidationError("fitting needs at least two points")
    branch = [[], []]
    for p in points:
        coords = elliptic_coordinates(F, p)
        for b in range(2):
            if not coords.degenerate[b]:
                branch[b].append(float(coords.lam[b]))
    best = None
    for vals in branch:
        if not vals:
            continue
        lam = float(np.median(vals))
        lam = _polish(F, lam, points, spread=max(1e-6, np.ptp(vals) if len(vals) > 1 else 1e-6))
        res = _membership_defect(F, lam, points)
        if best is None or res < best[1]:
            best = (lam, res)
    if best is None:
        raise NoFit("all candidate points sit on degenerate coordinate lines")
    lam, res = best
    if res > gate:
        raise NoFit(
            f"no confocal conic through the points (best lambda {lam:.9g}, "
            f"max defect {res:.3e} > {gate:.0e})"
        )
    return lam, res


def _polish(F, lam, points, spread):
    # golden-section on the sum of squares inside the band of lam
    lo, hi = lam - spread, lam + spread
    for edge in list(F.a):
        if lo < edge < lam:
            lo = edge + 1e-12
        if lam < edge < hi:
            hi = edge - 1e-12
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = _sum_sq(F, c, points), _sum_sq(F, d, points)
    for _ in range(120):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = _sum_sq(F, c, points)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = _sum_sq(F, d, points)
        if b - a < 1e-15 * max(1.0, abs(lam)):
            break
    return 0.5 * (a + b)


def conic_band(F, lam, tol=1e-9):
    """"ellipse" for lam below a_1, "hyperbola" inside (a_1, a_2)."""
    if lam < F.a[0] - tol:
        return "ellipse"
    if F.a[0] + tol < lam < F.a[1] - tol:
        return "hyperbola"
    raise DegenerateCaustic(f"lambda {lam:.9g} sits on a degenerate member of the family")


@dataclass(frozen=True)
class GridClassification:
    conic_type: str
    predicted_type: str
    consistent: bool


def classify_grid(F, caustic_alpha, relation, fitted_lambda):
    """Fitted conic type against the predicted one.

    relation is ("difference", k) or ("sum", k) for single-trajectory
    grids, or "same"/"opposite" for two-trajectory grids: the winding
    direction about an elliptic caustic, or the direction of crossing
    the long axis for a hyperbolic caustic.

    The single-trajectory predictions reduce to the two-trajectory
    rules. Winding about an elliptic caustic is preserved by the
    boundary reflections, so the pairs (l_m, l_{m+k}) always wind the
    same way, while the reversed traversal in the sum pairing flips
    it. Crossing direction between the foci flips at every boundary
    reflection, so it survives k bounces with parity k, plus one flip
    for the reversal.
    """
    caustic = conic_band(F, float(caustic_alpha))
    got = conic_band(F, float(fitted_lambda))
    if isinstance(relation, str):
        if relation not in ("same", "opposite"):
            raise ValidationError(f"unknown trajectory relation {relation!r}")
        same = relation == "same"
    else:
        mode, k = relation
        if mode not in ("difference", "sum"):
            raise ValidationError(f"unknown grid mode {mode!r}")
        if caustic == "ellipse":
            same = mode == "difference"
        else:
            same = (int(k) % 2 == 0) == (mode == "difference")
    if caustic == "ellipse":
        predicted = "ellipse" if same else "hyperbola"
    else:
        predicted = "hyperbola" if same else "ellipse"
    return GridClassification(got, predicted, got == predicted)


def half_branch_check(F, gridset, axis_tol=1e-9):
    """Do the points stay on two centrally symmetric half-branches?

    For a fitted hyperbola the branch is the sign of x_2 and the half
    the sign of x_1; the point set passes when its labels fit inside
    one centrally symmetric label pair. Points on an axis carry no
    label. Opposite-winding pairs about an elliptic caustic should
    pass; three or more occupied labels fail.
    """
    if gridset.conic_type != "hyperbola":
        raise ValidationError("half-branch localization applies to hyperbolic grids")
    scale = F.length_scale
    labels = set()
    for p in gridset.points:
        sx = 0 if abs(p[0]) < axis_tol * scale else (1 if p[0] > 0 else -1)
        sy = 0 if abs(p[1]) < axis_tol * scale else (1 if p[1] > 0 else -1)
        if sx == 0 or sy == 0:
            continue
        labels.add((sx, sy))
    if len(labels) <= 1:
        return True
    if len(labels) == 2:
        l1, l2 = labels
        return l1[0] == -l2[0] and l1[1] == -l2[1]
    return False


@dataclass(frozen=True)
class GridSkewProfile:
    """s-skew data of the pairs (a_m, b_m) of two space trajectories."""

    classes: tuple
    s_values: tuple
    s_constant: bool
    quadrics_constant: bool


def grid_skew_profile(t1, t2, ctx, m_range, tol=1e-6):
    """Skew class of each pair (a_m, b_m); the theorem predicts both the
    class and the multiset of connecting quadrics to be m-independent."""
    F = t1.F
    if F.d != 3:
        raise ValidationError("the skew grid profile is a space construction")
    _check_same_caustic(t1, t2)
    got = np.asarray(t1.caustics.alpha)
    want = np.asarray(ctx.alphas)
    if float(np.max(np.abs(got - want))) > 1e-8:
        raise CausticMismatch("trajectories do not live in the context's line family")
    classes = []
    for m in m_range:
        a_m = t1.segment(m)
        b_m = t2.segment(m)
        classes.append(s_skew(ctx, a_m, b_m))
    s_values = tuple(c.s for c in classes)
    s_constant = len(set(s_values)) <= 1
    quadrics_constant = True
    if classes:
        base = sorted(classes[0].connecting_quadrics)
        for c in classes[1:]:
            cur = sorted(c.connecting_quadrics)
            if len(cur) != len(base) or any(
                abs(x - y) > tol for x, y in zip(cur, base)
            ):
                quadrics_constant = False
                break
    return GridSkewProfile(
        classes=tuple(classes),
        s_values=s_values,
        s_constant=s_constant,
        quadrics_constant=quadrics_constant,
    )
