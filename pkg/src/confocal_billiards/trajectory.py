"""Billiard trajectories: simulation, closure detection, winding data.

A trajectory with n bounces stores n+1 points (row 0 is the start) and
n+1 unit directions (row k is the direction of motion after the k-th
event, row 0 the initial direction). Segment k is the line through
point k with direction k; every segment is tangent to the same d-1
caustics of the family.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import core
from .confocal import CausticSet, ConfocalFamily, Line, as_point, caustics_of_line
from .errors import (
    DegenerateCaustic,
    NoForwardIntersection,
    ParseError,
    TangentialIncidence,
    ValidationError,
)

RECORD_FORMAT = "confocal-billiards/trajectory"
RECORD_VERSION = 1


@dataclass(frozen=True)
class Trajectory:
    F: ConfocalFamily
    points: tuple  # (n+1) rows of d floats
    dirs: tuple
    bounce_params: tuple  # lam used at each of the n bounces
    caustics: CausticSet

    @property
    def n(self):
        return len(self.bounce_params)

    def point(self, k):
        return np.array(self.points[k])

    def direction(self, k):
        return np.array(self.dirs[k])

    def segment(self, k):
        return Line.from_point_direction(self.points[k], self.dirs[k])

    @property
    def segments(self):
        return [self.segment(k) for k in range(len(self.points))]


def _make_trajectory(F, points, dirs, lams):
    start = Line.from_point_direction(points[0], dirs[0])
    caustics = caustics_of_line(F, start)
    return Trajectory(
        F=F,
        points=tuple(tuple(float(c) for c in row) for row in points),
        dirs=tuple(tuple(float(c) for c in row) for row in dirs),
        bounce_params=tuple(float(v) for v in lams),
        caustics=caustics,
    )


def step(F, lam, x, v, tmin=1e-10):
    """One bounce on Q_lam: forward intersection then reflection.

    Returns (t, x_new, v_new) with t the travel parameter. Grazing hits
    (|v . n| below tolerance) raise TangentialIncidence.
    """
    x = as_point(x, F.d)
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    t = core.forward_t(F.arr, lam, x, v, tmin)
    if math.isnan(t):
        raise NoForwardIntersection(f"no forward hit on Q_{lam}")
    x1 = x + t * v
    grad = core.quadric_grad(F.arr, lam, x1)
    n = grad / np.linalg.norm(grad)
    if abs(float(np.dot(v, n))) <= 1e-10:
        raise TangentialIncidence("grazing incidence during simulation")
    v1 = core.reflect_dir(F.arr, lam, x1, v)
    return t, x1, v1


def simulate(F, x0, v0, n, lam=0.0, tmin=1e-10):
    """Billiard inside the member Q_lam, n bounces from (x0, v0).

    The start may lie strictly inside or on the boundary. For an
    ellipsoidal boundary (lam < a_1) points outside are rejected.
    """
    F.check_nondegenerate(lam)
    x0 = as_point(x0, F.d)
    v0 = np.asarray(v0, dtype=float)
    nv = np.linalg.norm(v0)
    if nv < 1e-14:
        raise ValidationError("zero initial direction")
    v0 = v0 / nv
    if lam < F.a[0]:
        value = core.quadric_value(F.arr, lam, x0)
        if value > 1e-9:
            raise ValidationError(f"start lies outside the boundary (Q - 1 = {value:.3e})")
    status, k, points, dirs = core.simulate_fixed(F.arr, lam, x0, v0, n, tmin, 1e-10)
    if status == core.SIM_NO_FORWARD:
        raise NoForwardIntersection(f"no forward hit at bounce {k + 1}")
    if status == core.SIM_TANGENTIAL:
        raise TangentialIncidence(f"grazing incidence at bounce {k + 1}")
    return _make_trajectory(F, points, dirs, [lam] * n)


def simulate_sequence(F, x0, v0, lams, tmin=1e-10):
    """Reflect off the family members lams[0], lams[1], ... in order."""
    x = as_point(x0, F.d)
    v = np.asarray(v0, dtype=float)
    v = v / np.linalg.norm(v)
    points = [x.copy()]
    dirs = [v.copy()]
    for lam in lams:
        F.check_nondegenerate(lam)
        _, x, v = step(F, lam, x, v, tmin)
        points.append(x)
        dirs.append(v)
    return _make_trajectory(F, points, dirs, lams)


def detect_closure(traj, tol=1e-7):
    """Smallest k >= 1 with state k equal to state 0, or None.

    The gap compares positions relative to the family length scale and
    directions absolutely; closure means gap < tol.
    """
    L = traj.F.length_scale
    p0 = traj.point(0)
    v0 = traj.direction(0)
    for k in range(1, len(traj.points)):
        gap = max(
            float(np.max(np.abs(traj.point(k) - p0))) / L,
            float(np.max(np.abs(traj.direction(k) - v0))),
        )
        if gap < tol:
            return k, gap
    return None


def closure_gap(traj, k):
    """Gap of the would-be period k (state k vs state 0)."""
    L = traj.F.length_scale
    return max(
        float(np.max(np.abs(traj.point(k) - traj.point(0)))) / L,
        float(np.max(np.abs(traj.direction(k) - traj.direction(0)))),
    )


def caustic_drift(traj):
    """Worst deviation of any segment's caustic parameters from segment 0's."""
    base = np.asarray(traj.caustics.alpha)
    worst = 0.0
    for k in range(1, len(traj.points)):
        c = caustics_of_line(traj.F, traj.segment(k))
        worst = max(worst, float(np.max(np.abs(np.asarray(c.alpha) - base))))
    return worst


@dataclass(frozen=True)
class WindingInfo:
    """Per-orbit rotation data for plane billiards.

    kind is "elliptic" or "hyperbolic" after the caustic. For an
    elliptic caustic, winding is the constant sign of x cross v at the
    bounces. For a hyperbolic caustic, crossings holds the sign of the
    velocity component along the minor axis (the axis the hyperbola
    does not cross) at each bounce; it alternates strictly.
    """

    kind: str
    winding: int
    crossings: tuple
    consistent: bool


def classify_winding_2d(traj):
    if traj.F.d != 2:
        raise ValidationError("winding classification is for d = 2")
    alpha = traj.caustics.alpha[0]
    if traj.caustics.degenerate_flags[0]:
        raise DegenerateCaustic(f"caustic parameter {alpha} degenerates to an axis")
    a1, a2 = traj.F.a
    if alpha < a1:
        signs = []
        for k in range(len(traj.points)):
            x = traj.point(k)
            v = traj.direction(k)
            signs.append(int(math.copysign(1.0, x[0] * v[1] - x[1] * v[0])))
        consistent = all(s == signs[0] for s in signs)
        return WindingInfo("elliptic", signs[0], tuple(signs), consistent)
    if alpha < a2:
        # the confocal hyperbola crosses the x_2 axis; bounces alternate
        # sides of it, so the x_1 velocity sign flips at every bounce
        signs = [int(math.copysign(1.0, traj.direction(k)[0])) for k in range(len(traj.points))]
        consistent = all(signs[k] == -signs[k - 1] for k in range(1, len(signs)))
        return WindingInfo("hyperbolic", 0, tuple(signs), consistent)
    raise DegenerateCaustic(f"caustic parameter {alpha} is not between a_1 and a_2 or below a_1")


def to_record(traj):
    """Plain-dict snapshot of a trajectory (JSON-friendly, round-trips)."""
    return {
        "format": RECORD_FORMAT,
        "version": RECORD_VERSION,
        "a": list(traj.F.a),
        "bounce_params": list(traj.bounce_params),
        "points": [list(row) for row in traj.points],
        "dirs": [list(row) for row in traj.dirs],
    }


def from_record(rec):
    """Rebuild a trajectory from to_record output, revalidating shapes."""
    if not isinstance(rec, dict):
        raise ParseError("trajectory record must be a mapping")
    if rec.get("format") != RECORD_FORMAT:
        raise ParseError(f"unknown record format {rec.get('format')!r}")
    if rec.get("version") != RECORD_VERSION:
        raise ParseError(f"unsupported record version {rec.get('version')!r}")
    try:
        F = ConfocalFamily(tuple(rec["a"]))
        lams = [float(v) for v in rec["bounce_params"]]
        points = [as_point(row, F.d) for row in rec["points"]]
        dirs = [as_point(row, F.d) for row in rec["dirs"]]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed trajectory record: {exc}") from exc
    if len(points) != len(lams) + 1 or len(dirs) != len(points):
        raise ParseError("trajectory record has inconsistent lengths")
    return _make_trajectory(F, points, dirs, lams)
