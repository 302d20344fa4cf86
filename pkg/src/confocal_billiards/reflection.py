"""Billiard reflection on confocal quadrics and the double reflection quad.

Reflection at x on Q_lam mirrors the direction across the tangent
hyperplane. Together with its sign flip this gives the real and virtual
reflected rays; as unoriented lines both span the same reflected line.
The double reflection construction completes a line and two quadrics of
the family to a closed quadrilateral of four lines obeying the
reflection law at each vertex, with all four tangent hyperplanes in one
pencil.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import core
from .confocal import (
    Hyperplane,
    Line,
    as_point,
    common_point,
    line_distance,
    pole_of_hyperplane,
    quadric_eval_grad,
    tangent_hyperplane,
)
from .errors import (
    DegenerateConfiguration,
    LinesNotConcurrent,
    NoRealIntersection,
    NotOnQuadric,
    TangentialIncidence,
    ValidationError,
)

GRAZING_TOL = 1e-10


def reflect(F, lam, x, dir_in):
    """Real and virtual reflected directions at x on Q_lam (both unit)."""
    x = as_point(x, F.d)
    v = np.asarray(dir_in, dtype=float)
    nv = np.linalg.norm(v)
    if nv < 1e-14:
        raise ValidationError("zero incoming direction")
    v = v / nv
    value, grad = quadric_eval_grad(F, lam, x)
    if abs(value) >= 1e-9:
        raise NotOnQuadric(f"|Q_lam(x) - 1| = {abs(value):.3e} at lam={lam}")
    n = grad / np.linalg.norm(grad)
    if abs(float(np.dot(v, n))) <= GRAZING_TOL:
        raise TangentialIncidence("grazing incidence, reflection undefined")
    real = core.reflect_dir(F.arr, lam, x, v)
    return real, -real


def reflect_line(F, lam, x, ell):
    """Reflection of the line ell (which must pass through x) at x on Q_lam."""
    x = as_point(x, F.d)
    gap = np.linalg.norm(np.cross(ell.direction, x - ell.point)) if F.d == 3 else None
    if gap is None:
        offset = x - ell.point
        gap = abs(offset[0] * ell.v[1] - offset[1] * ell.v[0]) if F.d == 2 else None
    if gap is None:
        w = x - ell.point
        w = w - float(np.dot(w, ell.direction)) * ell.direction
        gap = float(np.linalg.norm(w))
    if gap > 1e-7 * max(1.0, float(np.linalg.norm(x))):
        raise LinesNotConcurrent(f"line misses the reflection point by {gap:.3e}")
    real, _ = reflect(F, lam, x, ell.direction)
    return Line.from_point_direction(x, real)


def second_intersection(F, lam, x_on, toward):
    """Second point of Q_lam on the line through x_on and toward.

    x_on must lie on Q_lam, so t = 0 is one root of the intersection
    quadratic; the other root is read off as -2B/A.
    """
    x_on = as_point(x_on, F.d)
    toward = as_point(toward, F.d)
    u = toward - x_on
    nu = np.linalg.norm(u)
    if nu < 1e-12:
        raise DegenerateConfiguration("chord endpoints coincide")
    u = u / nu
    A, B, C = core.intersect_coeffs(F.arr, lam, x_on, u)
    if abs(C) > 1e-7:
        raise NotOnQuadric(f"chord start is off the quadric by {abs(C):.3e}")
    if abs(A) < 1e-14:
        raise NoRealIntersection("chord direction is asymptotic, no second point")
    t2 = -2.0 * B / A
    return x_on + t2 * u


@dataclass(frozen=True)
class LawReport:
    """Diagnostics of the reflection law for a pair of lines at a point."""

    ok: bool
    line_gap: float
    concurrency_gap: float
    cross_ratio: float


def reflection_law_check(F, lam, x, ell1, ell2, tol=1e-8):
    """Check that ell1 and ell2 obey the reflection law at x on Q_lam.

    Two independent diagnostics are reported: the canonical-form gap
    between ell2 and the reflection of ell1, and the cross-ratio of the
    four concurrent directions (ell1, ell2, normal, tangent trace),
    which equals -1 exactly when the pair is harmonic with respect to
    the normal and the tangent hyperplane.
    """
    x = as_point(x, F.d)
    gaps = []
    for ell in (ell1, ell2):
        w = x - ell.point
        w = w - float(np.dot(w, ell.direction)) * ell.direction
        gaps.append(float(np.linalg.norm(w)))
    concurrency_gap = max(gaps)
    mirrored = reflect_line(F, lam, x, ell1)
    line_gap = line_distance(mirrored, ell2)

    _, grad = quadric_eval_grad(F, lam, x)
    n = grad / np.linalg.norm(grad)
    v1 = ell1.direction
    t = v1 - float(np.dot(v1, n)) * n
    nt = np.linalg.norm(t)
    if nt < 1e-12:
        # normal incidence: ell2 must be the same line, tangent trace undefined
        cross_ratio = -1.0 if line_gap <= tol else math.inf
    else:
        t = t / nt
        def plane_coords(u):
            return float(np.dot(u, n)), float(np.dot(u, t))
        u1, u2 = plane_coords(v1), plane_coords(ell2.direction)
        u3, u4 = (1.0, 0.0), (0.0, 1.0)
        def wedge(p, q):
            return p[0] * q[1] - p[1] * q[0]
        num = wedge(u1, u3) * wedge(u2, u4)
        den = wedge(u1, u4) * wedge(u2, u3)
        cross_ratio = num / den if den != 0.0 else math.inf
    ok = concurrency_gap <= tol * max(1.0, F.length_scale) and line_gap <= tol
    return LawReport(ok, line_gap, concurrency_gap, cross_ratio)


@dataclass(frozen=True)
class PencilReport:
    ok: bool
    ratio: float
    svals: tuple


def pencil_check(planes, rel_tol=1e-9):
    """Do the hyperplanes lie in one pencil (covector matrix of rank <= 2)?

    The ratio is sigma_3 / sigma_1 of the stacked canonical covectors.
    """
    M = np.stack([pl.covector for pl in planes])
    s = np.linalg.svd(M, compute_uv=False)
    if len(s) < 3 or s[0] < 1e-14:
        return PencilReport(True, 0.0, tuple(float(v) for v in s))
    ratio = float(s[2] / s[0])
    return PencilReport(ratio < rel_tol, ratio, tuple(float(v) for v in s))


@dataclass(frozen=True)
class DRCQuad:
    """Double reflection quad: four lines and the data used to build them.

    lines = (ell1, ell2, ell1p, ell2p); ell2 is the reflection of ell1
    at x1 on Q_lam1, ell1p its reflection at y1 on Q_lam2, and ell2p
    closes the quad through x2 and y2. planes are the tangent
    hyperplanes at (x1, y1, y2, x2), members of one pencil.
    """

    lam1: float
    lam2: float
    lines: tuple
    x1: tuple
    y1: tuple
    x2: tuple
    y2: tuple
    planes: tuple

    @property
    def fourth(self):
        return self.lines[3]

    def law_pairs(self):
        """(line, line, point, lam) tuples for the four reflection laws."""
        ell1, ell2, ell1p, ell2p = self.lines
        return (
            (ell1, ell2, np.array(self.x1), self.lam1),
            (ell1, ell1p, np.array(self.y1), self.lam2),
            (ell2, ell2p, np.array(self.y2), self.lam2),
            (ell1p, ell2p, np.array(self.x2), self.lam1),
        )


def build_drc_at(F, lam1, lam2, ell1, x1, y1):
    """Complete ell1 and chosen incidence points to a double reflection quad.

    x1 must be a point of ell1 on Q_lam1 and y1 a point of ell1 on
    Q_lam2. The quad is closed through the poles of the tangent
    hyperplanes with respect to the other quadric: the pole of the
    tangent at x1 taken on Q_lam2 spans y2 with y1, and symmetrically
    for x2.
    """
    if abs(lam1 - lam2) < 1e-12 * F.scale:
        raise DegenerateConfiguration("the two quadrics must be distinct family members")
    x1 = as_point(x1, F.d)
    y1 = as_point(y1, F.d)
    u1 = tangent_hyperplane(F, lam1, x1)
    v1 = tangent_hyperplane(F, lam2, y1)
    z1 = pole_of_hyperplane(F, lam2, u1)
    w1 = pole_of_hyperplane(F, lam1, v1)
    if np.linalg.norm(w1 - x1) < 1e-10 or np.linalg.norm(z1 - y1) < 1e-10:
        raise DegenerateConfiguration("pole coincides with its own contact point")
    x2 = second_intersection(F, lam1, x1, w1)
    y2 = second_intersection(F, lam2, y1, z1)
    ell2 = Line.through_points(x1, y2)
    ell1p = Line.through_points(y1, x2)
    ell2p = Line.through_points(x2, y2)
    u2 = tangent_hyperplane(F, lam1, x2)
    v2 = tangent_hyperplane(F, lam2, y2)
    return DRCQuad(
        lam1=float(lam1),
        lam2=float(lam2),
        lines=(ell1, ell2, ell1p, ell2p),
        x1=tuple(x1),
        y1=tuple(y1),
        x2=tuple(x2),
        y2=tuple(y2),
        planes=(u1, v1, v2, u2),
    )


def build_drc(F, lam1, lam2, ell1, branch=(0, 0)):
    """Double reflection quad from a line, picking intersection branches.

    branch = (i, j) selects the i-th point of ell1 on Q_lam1 and the
    j-th on Q_lam2, each in increasing line-parameter order.
    """
    from .confocal import line_quadric_intersect

    count1, pts1, _ = line_quadric_intersect(F, lam1, ell1)
    if count1 < 2:
        raise (TangentialIncidence if count1 == 1 else NoRealIntersection)(
            f"line meets Q_{lam1} in {count1} point(s), need 2"
        )
    count2, pts2, _ = line_quadric_intersect(F, lam2, ell1)
    if count2 < 2:
        raise (TangentialIncidence if count2 == 1 else NoRealIntersection)(
            f"line meets Q_{lam2} in {count2} point(s), need 2"
        )
    return build_drc_at(F, lam1, lam2, ell1, pts1[branch[0]], pts2[branch[1]])


@dataclass(frozen=True)
class DRCReport:
    ok: bool
    max_law_gap: float
    pencil: PencilReport


def drc_verify(F, quad, tol=1e-8):
    """Verify the four reflection laws and the pencil property of a quad."""
    worst = 0.0
    ok = True
    for ea, eb, pt, lam in quad.law_pairs():
        rep = reflection_law_check(F, lam, pt, ea, eb, tol=tol)
        worst = max(worst, rep.line_gap)
        ok = ok and rep.ok
    pen = pencil_check(quad.planes)
    return DRCReport(ok and pen.ok, worst, pen)


def reflection_link(F, lam, base, mirror, hint=None, tol=1e-7):
    """The point on Q_lam at which mirror is the reflection of base.

    The two lines must meet on the quadric; hint, when given, is taken
    as that common point and only verified. The reflection law is
    checked before the point is returned.
    """
    if hint is not None:
        x = as_point(hint, F.d)
    else:
        x = common_point(base, mirror, tol * max(1.0, F.length_scale))
        if x is None:
            raise LinesNotConcurrent("lines have no common point to reflect at")
    value, _ = quadric_eval_grad(F, lam, x)
    if abs(value) > tol:
        raise NotOnQuadric(f"common point misses Q_lam by {abs(value):.3e}")
    rep = reflection_law_check(F, lam, x, base, mirror, tol=tol)
    if not rep.ok:
        raise DegenerateConfiguration(
            f"lines are not reflections of one another (gap {rep.line_gap:.3e})"
        )
    return x
