"""Confocal quadric families, elliptic coordinates, poles and caustics.

Conventions used throughout the package:

- The family is Q_lam : sum_i x_i^2 / (a_i - lam) = 1 with semiaxis
  parameters a_1 < ... < a_d. Members with lam < a_1 are ellipsoids;
  for a_k < lam < a_{k+1} the quadric is a hyperboloid-like member, and
  lam -> a_k degenerates to the coordinate hyperplane x_k = 0.
- A Line is stored canonically: p is the foot of the perpendicular from
  the origin (p . v = 0), v is a unit vector whose first component with
  |v_i| > 1e-9 is positive. Line equality is component-wise comparison
  of (p, v) within 1e-9.
- A Hyperplane is the covector (u_0, u_1, ..., u_d) of the equation
  u_0 + u_1 x_1 + ... + u_d x_d = 0, scaled so |(u_1, ..., u_d)| = 1 and
  sign-fixed like Line directions.
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import core
from .errors import (
    DegenerateCaustic,
    DegenerateLine,
    DegenerateQuadric,
    InvalidCoords,
    LineOnQuadric,
    NotOnQuadric,
    PoleAtInfinity,
    ValidationError,
    ZeroGradient,
)

LINE_TOL = 1e-9
SIGN_EPS = 1e-9
DEGENERATE_GUARD = 1e-12


def as_point(x, d=None):
    """Validate and convert a coordinate sequence to a float array."""
    p = np.asarray(x, dtype=float)
    if p.ndim != 1:
        raise ValidationError(f"point must be 1-d, got shape {p.shape}")
    if d is not None and p.shape[0] != d:
        raise ValidationError(f"point has dimension {p.shape[0]}, expected {d}")
    if not np.all(np.isfinite(p)):
        raise ValidationError("point has non-finite coordinates")
    return p


@dataclass(frozen=True)
class ConfocalFamily:
    """Semiaxis parameters a_1 < ... < a_d of a confocal family."""

    a: tuple

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        object.__setattr__(self, "a", a)
        if len(a) < 2:
            raise ValidationError("need dimension d >= 2")
        if not all(math.isfinite(v) for v in a):
            raise ValidationError("semiaxes must be finite")
        if any(a[i] >= a[i + 1] for i in range(len(a) - 1)):
            raise ValidationError(f"semiaxes must be strictly increasing, got {a}")

    @property
    def d(self):
        return len(self.a)

    @cached_property
    def arr(self):
        return np.array(self.a)

    @property
    def scale(self):
        return max(1.0, max(abs(v) for v in self.a))

    @property
    def length_scale(self):
        return math.sqrt(self.scale)

    def check_nondegenerate(self, lam):
        if min(abs(lam - ai) for ai in self.a) < DEGENERATE_GUARD * self.scale:
            raise DegenerateQuadric(f"lam={lam} hits a semiaxis parameter of {self.a}")


def _canonical_direction(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n < 1e-14:
        raise ValidationError("zero direction vector")
    v = v / n
    for comp in v:
        if abs(comp) > SIGN_EPS:
            if comp < 0.0:
                v = -v
            break
    return v


@dataclass(frozen=True)
class Line:
    """Affine line in canonical (foot-of-perpendicular, unit direction) form."""

    p: tuple
    v: tuple

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise ValidationError("direction must be unit length")
        if abs(float(np.dot(p, v))) > 1e-12 * max(1.0, float(np.linalg.norm(p))):
            raise ValidationError("p must be the foot of the perpendicular (p.v = 0)")
        object.__setattr__(self, "p", tuple(float(c) for c in p))
        object.__setattr__(self, "v", tuple(float(c) for c in v))

    @classmethod
    def from_point_direction(cls, point, direction):
        v = _canonical_direction(direction)
        point = np.asarray(point, dtype=float)
        p = point - float(np.dot(point, v)) * v
        # exact re-orthogonalization guards the p.v invariant against rounding
        p = p - float(np.dot(p, v)) * v
        return cls(tuple(p), tuple(v))

    @classmethod
    def through_points(cls, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return cls.from_point_direction(x, y - x)

    @property
    def point(self):
        return np.array(self.p)

    @property
    def direction(self):
        return np.array(self.v)

    @property
    def d(self):
        return len(self.p)

    def at(self, t):
        return self.point + t * self.direction


def line_distance(l1, l2):
    """Component-wise distance between canonical forms; 0 iff same line."""
    dp = max(abs(c1 - c2) for c1, c2 in zip(l1.p, l2.p))
    dv = max(abs(c1 - c2) for c1, c2 in zip(l1.v, l2.v))
    return max(dp, dv)


def lines_equal(l1, l2, tol=LINE_TOL):
    return line_distance(l1, l2) <= tol


def closest_approach(l1, l2):
    """Parameters (t1, t2) of the closest points and their distance.

    For (near-)parallel lines t2 is the projection of l1.p and the
    distance is the offset between the supporting lines.
    """
    v1 = l1.direction
    v2 = l2.direction
    w0 = l1.point - l2.point
    b = float(np.dot(v1, v2))
    d0 = float(np.dot(v1, w0))
    e = float(np.dot(v2, w0))
    denom = 1.0 - b * b
    if abs(denom) < 1e-14:
        t1 = 0.0
        t2 = e
    else:
        t1 = (b * e - d0) / denom
        t2 = (e - b * d0) / denom
    gap = w0 + t1 * v1 - t2 * v2
    return t1, t2, float(np.linalg.norm(gap))


def common_point(l1, l2, tol):
    """Intersection point of two lines, or None if they miss by more than tol."""
    t1, t2, dist = closest_approach(l1, l2)
    if dist > tol:
        return None
    return 0.5 * (l1.at(t1) + l2.at(t2))


@dataclass(frozen=True)
class Hyperplane:
    """Covector (u_0, ..., u_d) of u_0 + sum u_i x_i = 0, spatial part unit."""

    u: tuple

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        spatial = u[1:]
        n = np.linalg.norm(spatial)
        if n < 1e-14:
            raise ValidationError("hyperplane needs a nonzero spatial part")
        u = u / n
        for comp in u[1:]:
            if abs(comp) > SIGN_EPS:
                if comp < 0.0:
                    u = -u
                break
        object.__setattr__(self, "u", tuple(float(c) for c in u))

    @property
    def u0(self):
        return self.u[0]

    @property
    def spatial(self):
        return np.array(self.u[1:])

    @property
    def covector(self):
        return np.array(self.u)

    def eval(self, x):
        return self.u[0] + float(np.dot(self.spatial, np.asarray(x, dtype=float)))


@dataclass(frozen=True)
class EllipticCoords:
    """The d confocal parameters through a point, ascending; flags mark lam = a_i."""

    lam: tuple
    degenerate: tuple


@dataclass(frozen=True)
class CausticSet:
    """The d-1 tangency parameters of a line, ascending."""

    alpha: tuple
    degenerate_flags: tuple


def quadric_eval_grad(F, lam, x):
    """Value sum x_i^2/(a_i - lam) - 1 and gradient 2 x_i/(a_i - lam)."""
    F.check_nondegenerate(lam)
    x = as_point(x, F.d)
    value = core.quadric_value(F.arr, lam, x)
    grad = core.quadric_grad(F.arr, lam, x)
    return float(value), grad


def tangent_hyperplane(F, lam, x):
    """Tangent hyperplane at a point of Q_lam (gradient normal form)."""
    value, grad = quadric_eval_grad(F, lam, x)
    if abs(value) >= 1e-9:
        raise NotOnQuadric(f"|Q_lam(x) - 1| = {abs(value):.3e} at lam={lam}")
    gn = np.linalg.norm(grad)
    if gn < 1e-12:
        raise ZeroGradient(f"vanishing gradient at {x}")
    x = as_point(x, F.d)
    u0 = -float(np.dot(grad, x))
    return Hyperplane((u0, *grad))


def pole_of_hyperplane(F, lam, u):
    """Pole of the hyperplane with respect to Q_lam.

    In homogeneous coordinates the polarity sends the covector
    (u_0, u_1, ..., u_d) to the point (-u_0, (a_1 - lam) u_1, ...); the
    affine pole exists iff the hyperplane misses the center, i.e. u_0 != 0.
    """
    F.check_nondegenerate(lam)
    u0 = u.u0
    if abs(u0) < 1e-12:
        raise PoleAtInfinity("hyperplane through the center has its pole at infinity")
    return -(F.arr - lam) * u.spatial / u0


def elliptic_coordinates(F, x):
    """Jacobi elliptic coordinates of a point, ascending and interlacing."""
    x = as_point(x, F.d)
    lam, flags = core.elliptic_coords(F.arr, x, DEGENERATE_GUARD * F.scale)
    return EllipticCoords(tuple(float(v) for v in lam), tuple(bool(f) for f in flags))


def point_from_elliptic(F, coords, signs):
    """Invert elliptic coordinates: x_i^2 = prod_j (a_i - lam_j) / prod_{j!=i} (a_i - a_j)."""
    lam = np.asarray(coords.lam, dtype=float)
    if len(lam) != F.d:
        raise InvalidCoords(f"need {F.d} coordinates, got {len(lam)}")
    a = F.arr
    x = np.empty(F.d)
    for i in range(F.d):
        num = float(np.prod(a[i] - lam))
        den = float(np.prod(np.delete(a[i] - a, i)))
        ratio = num / den
        if ratio < -1e-12 * F.scale:
            raise InvalidCoords(f"x_{i + 1}^2 = {ratio:.3e} < 0; coordinates violate interlacing")
        x[i] = math.copysign(math.sqrt(max(ratio, 0.0)), 1.0 if signs[i] >= 0 else -1.0)
    return x


def line_quadric_intersect(F, lam, ell):
    """Intersection of a line with Q_lam.

    Returns (count, points, discriminant) where the discriminant is
    B^2 - A C of the quadratic A t^2 + 2 B t + C = 0 along the line;
    it equals the tangency form Phi_lam(p, v). count = 1 means the
    relative discriminant is below the tangency tolerance 1e-10, except
    in the measure-zero case A = 0 (direction asymptotic to Q_lam),
    where the single transversal crossing is returned.
    """
    F.check_nondegenerate(lam)
    p = ell.point
    v = ell.direction
    A, B, C = core.intersect_coeffs(F.arr, lam, p, v)
    disc = B * B - A * C
    if abs(A) < 1e-14:
        if abs(B) < 1e-14:
            if abs(C) < 1e-12:
                raise LineOnQuadric(f"line lies on Q_{lam}")
            return 0, [], disc
        t = -C / (2.0 * B)
        return 1, [ell.at(t)], disc
    rel = disc / max(B * B, abs(A * C), 1e-300)
    if abs(rel) < 1e-10:
        return 1, [ell.at(-B / A)], disc
    if disc < 0.0:
        return 0, [], disc
    sq = math.sqrt(disc)
    q = -(B + math.copysign(sq, B))
    t1 = q / A
    t2 = C / q if q != 0.0 else 0.0
    ts = sorted((t1, t2))
    return 2, [ell.at(t) for t in ts], disc


def tangency_defect(F, lam, ell):
    """Relative discriminant of the line-quadric quadratic; ~0 at tangency."""
    A, B, C = core.intersect_coeffs(F.arr, lam, ell.point, ell.direction)
    disc = B * B - A * C
    return disc / max(B * B, abs(A * C), 1e-300)


def _caustic_poly(F, p, v):
    """Coefficients (highest degree first) of G(t) = Phi_t(p, v) prod_i (a_i - t).

    With |v| = 1,
      G(t) = sum_i v_i^2 prod_{k!=i}(a_k - t)
           - sum_{i<j} (p_i v_j - p_j v_i)^2 prod_{k!=i,j}(a_k - t),
    a polynomial of degree d-1 with leading coefficient (-1)^(d-1) whose
    roots are the caustic parameters of the line.
    """
    a = F.arr
    d = F.d
    G = np.zeros(d)
    for i in range(d):
        roots = np.delete(a, i)
        # np.poly gives monic prod(t - a_k); flip sign per factor for (a_k - t)
        Si = np.poly(roots) * (-1.0) ** (d - 1)
        G += v[i] * v[i] * Si
    for i in range(d):
        for j in range(i + 1, d):
            m = p[i] * v[j] - p[j] * v[i]
            if m == 0.0:
                continue
            roots = np.delete(a, (i, j))
            Sij = np.poly(roots) * (-1.0) ** (d - 2)
            G[1:] -= m * m * Sij
    return G


def caustics_of_line(F, ell):
    """Chasles tangency parameters: the d-1 roots of the caustic polynomial."""
    p = ell.point
    v = ell.direction
    G = _caustic_poly(F, p, v)
    if abs(G[0]) < 1e-8:
        raise DegenerateLine("caustic polynomial degenerates below degree d-1")
    roots = np.roots(G)
    alphas = []
    imag_tol = 1e-7 * F.scale
    for r in roots:
        if abs(r.imag) > imag_tol:
            raise DegenerateLine(f"complex caustic parameter {r}")
        t = float(r.real)
        # Newton polish on the real polynomial
        dG = np.polyder(G)
        for _ in range(3):
            g = float(np.polyval(G, t))
            dg = float(np.polyval(dG, t))
            if dg == 0.0:
                break
            step = g / dg
            if not math.isfinite(step) or abs(step) > F.scale:
                break
            t -= step
        alphas.append(t)
    alphas.sort()
    flag_tol = 1e-8 * F.scale
    flags = tuple(any(abs(t - ai) <= flag_tol for ai in F.a) for t in alphas)
    return CausticSet(tuple(alphas), flags)


def caustic_ordering_ok(F, C, tol=1e-9):
    """Merged ordering b_1 < ... < b_{2d-1} with alpha_j in {b_{2j-1}, b_{2j}}."""
    merged = sorted(list(F.a) + list(C.alpha))
    for j, alpha in enumerate(sorted(C.alpha), start=1):
        lo, hi = merged[2 * j - 2], merged[2 * j - 1]
        if not (lo - tol * F.scale <= alpha <= hi + tol * F.scale):
            return False
    return True


def _cone_matrix(F, lam, x):
    """Quadratic form M with v^T M v = Phi_lam(x, v) (tangent cone from x)."""
    w = 1.0 / (F.arr - lam)
    q = w * x
    val = float(np.dot(x, q)) - 1.0
    return np.outer(q, q) - val * np.diag(w)


def _dedupe_dirs(cands):
    out = []
    for v in cands:
        v = _canonical_direction(v)
        if not any(np.max(np.abs(v - u)) < 1e-8 for u in out):
            out.append(v)
    out.sort(key=lambda u: tuple(np.round(u, 10)))
    return out


def _polish_tangent_dir(mats, v):
    # Gauss-Newton on the tangency residuals over the unit sphere
    for _ in range(3):
        r = np.array([float(v @ M @ v) for M in mats])
        J = np.stack([2.0 * (M @ v) for M in mats])
        try:
            step, *_ = np.linalg.lstsq(J, r, rcond=None)
        except np.linalg.LinAlgError:
            return v
        v = v - step
        v = v / np.linalg.norm(v)
    return v


def tangent_directions(F, x, alphas):
    """Unit directions v at x tangent to every Q_alpha, alphas of length d-1.

    Supported for d = 2 (one quadratic form) and d = 3 (pencil
    factorization of two tangent cones). Returns [] when no real common
    tangent line passes through x.
    """
    x = as_point(x, F.d)
    for alpha in alphas:
        if np.min(np.abs(F.arr - alpha)) <= 1e-12 * F.scale:
            raise DegenerateCaustic(
                f"caustic parameter {alpha} coincides with a family parameter"
            )
    mats = [_cone_matrix(F, alpha, x) for alpha in alphas]
    scale = max(float(np.max(np.abs(M))) for M in mats)
    cands = []
    if F.d == 2:
        (aM, bM), (_, cM) = mats[0]
        if abs(aM) >= abs(cM):
            disc = bM * bM - cM * aM
            if disc >= -1e-12 * scale * scale:
                sq = math.sqrt(max(disc, 0.0))
                for s in (+1.0, -1.0):
                    r = (-bM + s * sq) / aM
                    cands.append(np.array([1.0, r]))
        else:
            disc = bM * bM - aM * cM
            if disc >= -1e-12 * scale * scale:
                sq = math.sqrt(max(disc, 0.0))
                for s in (+1.0, -1.0):
                    r = (-bM + s * sq) / cM
                    cands.append(np.array([r, 1.0]))
    elif F.d == 3:
        M1, M2 = mats
        mus = np.array([0.0, 1.0, -1.0, 2.0])
        dets = [float(np.linalg.det(M1 - m * M2)) for m in mus]
        V = np.vander(mus, 4)  # columns mu^3, mu^2, mu, 1
        cubic = np.linalg.solve(V, np.array(dets))
        for mu in np.roots(cubic):
            if abs(mu.imag) > 1e-8 * (1.0 + abs(mu.real)):
                continue
            K = M1 - float(mu.real) * M2
            K = 0.5 * (K + K.T)
            w, E = np.linalg.eigh(K)
            order = np.argsort(np.abs(w))
            n0 = E[:, order[0]]
            k1, k2 = w[order[1]], w[order[2]]
            kscale = max(abs(k1), abs(k2), 1e-300)
            planes = []
            if abs(k1) <= 1e-9 * kscale:
                planes.append(E[:, order[1]])
            elif k1 * k2 < 0.0:
                e1, e2 = E[:, order[1]], E[:, order[2]]
                wp = math.sqrt(abs(k2)) * e1 + math.sqrt(abs(k1)) * e2
                wm = math.sqrt(abs(k2)) * e1 - math.sqrt(abs(k1)) * e2
                planes.extend([wp, wm])
            else:
                continue
            for wv in planes:
                wv = wv / np.linalg.norm(wv)
                qa = float(wv @ M2 @ wv)
                qb = float(n0 @ M2 @ wv)
                qc = float(n0 @ M2 @ n0)
                if abs(qa) < 1e-12 * scale:
                    cands.append(wv)
                    if abs(qb) > 1e-12 * scale:
                        cands.append(n0 - qc / (2.0 * qb) * wv)
                    continue
                disc = qb * qb - qa * qc
                if disc < -1e-12 * scale * scale:
                    continue
                sq = math.sqrt(max(disc, 0.0))
                for s in (+1.0, -1.0):
                    beta = (-qb + s * sq) / qa
                    cands.append(n0 + beta * wv)
    else:
        raise ValidationError("tangent_directions supports d = 2 and d = 3 only")
    good = []
    for v in cands:
        n = np.linalg.norm(v)
        if not np.isfinite(n) or n < 1e-12:
            continue
        v = _polish_tangent_dir(mats, v / n)
        if all(abs(float(v @ M @ v)) <= 1e-8 * max(1.0, scale) for M in mats):
            good.append(v)
    return _dedupe_dirs(good)
