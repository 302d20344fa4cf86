"""The genus-2 billiard algebra on common tangent lines of two confocal
quadrics in three-space.

The carrier set A is the family of lines tangent to both caustic
quadrics Q_alpha1 and Q_alpha2. A fixed neutral line O turns A into a
commutative group: lines meeting O (the set C_O, each a reflection of O
at one of its points) generate, the involution tau swaps the two
reflections of O on the same quadric, and sums are read off fourth
lines of double reflection configurations. The sum of the four lines of
any DRC vanishes, which fixes every sign convention used below:

    fourth of DRC(O, a, b)       = -a - b          (a, b in C_O)
    x found by lines_meeting     = -p - q          (p, q the found lines)
    -m = tau(m), 2m via the reflection of tau(m) at its second
    intersection with the quadric of m.

Two caveats of working over the reals shape the implementation. First,
one line of A generally carries more than one group element: several
pairs of C_O lines can complete a DRC with O to the same fourth line,
and pairs that are not equivalent divisors generate sums and negatives
lying on different lines. Second, an element need not have a real
divisor pair at all (the two points of its divisor can be complex
conjugate); sums of an odd number of C_O elements routinely have none,
so decomposing an intermediate value by search is not an option.

The operations therefore carry provenance. The context caches, for
every line built here, the formal list of C_O summands it was built
from (its bag) and, when real, its divisor pair. Sums are evaluated
through quad webs that only ever need divisor pairs of two-element
sums, which are exact by construction: a + b for a, b in C_O is a
fourth DRC line; s + x for a two-sum x is the two-step completion
through the divisor pair of x; and (u1 + u2) + y for a two-sum y uses
the lines c_i = tau(u_i) + (-y), which meet y because c_i + y lies in
C_O, as the mids of a DRC based at y (two lines of the family meet,
generically, exactly when their sum lies in C_O). Longer sums
reassociate into these shapes through the bag. A line with no usable
record is pinned to one of its divisor pairs by search and the choice
is cached, keeping follow-up operations consistent.

All identities are numerical; constructions verify themselves (every
completion re-checks that the built quad reproduces its inputs) and
group identities are asserted in the test-suite at line distance 1e-6.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import core
from .confocal import (
    CausticSet,
    ConfocalFamily,
    Hyperplane,
    Line,
    as_point,
    caustics_of_line,
    closest_approach,
    common_point,
    elliptic_coordinates,
    line_quadric_intersect,
    lines_equal,
    quadric_eval_grad,
    tangent_hyperplane,
    tangency_defect,
)
from .errors import (
    CausticMismatch,
    DegenerateConfiguration,
    LinesNotConcurrent,
    SearchFailed,
    ValidationError,
)
from .reflection import (
    build_drc_at,
    pencil_check,
    reflect_line,
    reflection_law_check,
)
from .trajectory import Trajectory, _make_trajectory

ALGEBRA_TOL = 1e-6


class _SumCache:
    """Provenance bookkeeping for lines built by the group operations.

    Each record is a dict with keys "mids" and "bag". mids, when known,
    is ((m, lam, z), (m, lam, z)): the two C_O lines whose DRC with O
    has the key line as its fourth, each with its link on O. bag, when
    known, is the tuple of C_O lines the key line is a formal sum of.
    Lookup is by line coincidence; registration merges into an existing
    record rather than replacing it.
    """

    def __init__(self):
        self._items = []

    def find(self, ell, tol=1e-7):
        for known, rec in self._items:
            if lines_equal(known, ell, tol):
                return rec
        return None

    def put(self, ell, mids=None, bag=None):
        for known, rec in self._items:
            if lines_equal(known, ell, 1e-9):
                if mids is not None and rec.get("mids") is None:
                    rec["mids"] = mids
                if bag is not None and rec.get("bag") is None:
                    rec["bag"] = tuple(bag)
                return
        self._items.append(
            (ell, {"mids": mids, "bag": tuple(bag) if bag is not None else None})
        )


@dataclass(frozen=True)
class AlgebraContext:
    """Fixed data of the group: family, caustic pair, neutral line.

    pi is a plane orthogonal to O that is tangent to the confocal
    quadric Q_O, and the point T = pi cap O lies on Q_O. Reflecting O
    in pi returns O, since pi is orthogonal to it. Both pi and Q_O are
    built from O alone. When O runs parallel to a coordinate axis, pi
    and Q_O collapse onto the corresponding coordinate hyperplane and
    the reflection of O on the degenerate quadric is literal normal
    incidence; the context is then marked degenerate (Q_O holds the
    degenerate parameter a_i).
    """

    family: ConfocalFamily
    caustics: CausticSet
    O: Line
    Q_O: float
    pi: Hyperplane
    T: tuple
    degenerate: bool
    cache: _SumCache = field(default_factory=_SumCache, compare=False, repr=False)

    @property
    def alphas(self):
        return self.caustics.alpha


def _caustics_match(F, ell, alphas, tol):
    got = caustics_of_line(F, ell)
    return max(abs(g - a) for g, a in zip(got.alpha, alphas)) <= tol


def _mirror_in_plane(ell, pi):
    """Mirror image of a line under reflection in a hyperplane."""
    n = np.asarray(pi.spatial)
    c = -pi.u0
    p = ell.point - 2.0 * (float(np.dot(n, ell.point)) - c) * n
    v = ell.direction - 2.0 * float(np.dot(n, ell.direction)) * n
    return Line.from_point_direction(p, v)


def _perp_tangent_roots(F, O):
    """Parameters t where the plane orthogonal to O at O(t) is tangent
    to the confocal quadric through O(t).

    For canonical O (unit direction v, foot point p with p.v = 0) the
    plane with normal v through O(t) is tangent to Q_lam exactly when
    lam = A - t^2 with A = sum v_i^2 a_i, by the dual tangency condition
    sum u_i^2 (a_i - lam) = u_0^2. Asking O(t) to lie on that same
    quadric leaves one equation,

        g(t) = sum (p_i + t v_i)^2 / (a_i - A + t^2) - 1 = 0,

    whose real roots (generically two) this scans for. Roots with
    lam = A - t^2 within 1e-9 of a degenerate parameter a_i are
    dropped. Returns a list of (t, lam) pairs."""
    p = np.asarray(O.point)
    v = np.asarray(O.direction)
    a = F.arr
    A = float(np.sum(v * v * a))

    def g(t):
        den = a - A + t * t
        num = p + t * v
        return float(np.sum(num * num / den)) - 1.0

    poles = [math.sqrt(A - ai) for ai in a if A - ai > 0.0]
    span = (max(poles) if poles else 0.0) + 10.0 * F.length_scale
    guard = 1e-9 * max(1.0, F.length_scale)

    def clear(t):
        return all(abs(abs(t) - s) > 1e-7 for s in poles)

    ts = np.linspace(-span, span, 4001)
    roots = []
    prev_t = None
    prev_g = None
    for t in ts:
        if not clear(t):
            prev_t = None
            continue
        gt = g(t)
        if prev_t is not None and (prev_g < 0.0) != (gt < 0.0):
            lo, hi, glo = prev_t, float(t), prev_g
            for _ in range(90):
                mid = 0.5 * (lo + hi)
                gm = g(mid)
                if gm == 0.0:
                    lo = hi = mid
                    break
                if (gm < 0.0) == (glo < 0.0):
                    lo, glo = mid, gm
                else:
                    hi = mid
            t_root = 0.5 * (lo + hi)
            lam = A - t_root * t_root
            if abs(g(t_root)) < 1e-9 and min(abs(lam - ai) for ai in a) > guard:
                roots.append((t_root, float(lam)))
        prev_t, prev_g = float(t), gt
    return roots


def new_context(F, alpha1, alpha2, O, tol=1e-8):
    """Algebra context for the caustic pair (alpha1, alpha2) with neutral O."""
    if F.d != 3:
        raise ValidationError("the billiard algebra is implemented for d = 3")
    alphas = (float(alpha1), float(alpha2))
    got = caustics_of_line(F, O)
    if max(abs(g - a) for g, a in zip(got.alpha, alphas)) > tol:
        raise CausticMismatch(
            f"O has caustics {tuple(round(v, 12) for v in got.alpha)}, expected {alphas}"
        )
    caustics = CausticSet(alphas, got.degenerate_flags)
    v = O.direction

    axis = int(np.argmax(np.abs(v)))
    if abs(abs(v[axis]) - 1.0) < 1e-9:
        # O parallel to a coordinate axis: pi and Q_O collapse onto the
        # coordinate hyperplane x_axis = 0
        e = np.zeros(F.d)
        e[axis] = 1.0
        pi = Hyperplane((0.0, *e))
        t0 = -O.point[axis] / v[axis]
        T = O.at(t0)
        ctx = AlgebraContext(F, caustics, O, float(F.a[axis]), pi, tuple(float(c) for c in T), True)
    else:
        roots = _perp_tangent_roots(F, O)
        if not roots:
            raise DegenerateConfiguration(
                "no plane orthogonal to O is tangent to the confocal quadric "
                "through its intersection with O"
            )
        # deterministic pick among the (generically two) roots: largest
        # quadric parameter; for an axis-parallel O both roots carry the
        # same lam, so the choice stays continuous toward that limit
        t_star, lam_star = max(roots, key=lambda r: (r[1], r[0]))
        pi = Hyperplane((-t_star, *v))
        T = O.at(t_star)
        val, _ = quadric_eval_grad(F, lam_star, T)
        if abs(val) > 1e-7:
            raise DegenerateConfiguration(f"T drifted off Q_O ({val:.3e})")
        ctx = AlgebraContext(F, caustics, O, float(lam_star), pi, tuple(float(c) for c in T), False)

    # pi is orthogonal to O, so O is its own mirror image in pi; on a
    # degenerate context this is the billiard reflection on Q_O itself
    # (normal incidence on the coordinate hyperplane)
    if not lines_equal(_mirror_in_plane(O, ctx.pi), O, 1e-8):
        raise DegenerateConfiguration("O is not invariant under reflection in pi")
    # dual tangency of pi to Q_O: u_0^2 = sum u_i^2 (a_i - lam)
    if not ctx.degenerate:
        u = np.asarray(ctx.pi.u)
        gap = u[0] * u[0] - float(np.sum(u[1:] * u[1:] * (F.arr - ctx.Q_O)))
        if abs(gap) > 1e-7 * max(1.0, F.scale):
            raise DegenerateConfiguration(f"pi lost tangency to Q_O ({gap:.3e})")
    return ctx


def in_family(ctx, ell, tol=1e-6):
    """Is the line tangent to both caustics of the context?"""
    return _caustics_match(ctx.family, ell, ctx.alphas, tol)


def co_data(ctx, x, tol=ALGEBRA_TOL):
    """(lam, point) when x is a reflection of O, None otherwise.

    A line of the family meeting O is related to it by the reflection
    on one of the confocal quadrics through the common point; the three
    elliptic coordinates there are tested in turn.
    """
    F = ctx.family
    if lines_equal(x, ctx.O, 1e-9):
        return None
    w = common_point(ctx.O, x, tol * max(1.0, F.length_scale))
    if w is None:
        return None
    coords = elliptic_coordinates(F, w)
    for lam, flagged in zip(coords.lam, coords.degenerate):
        if flagged:
            continue
        rep = reflection_law_check(F, lam, w, ctx.O, x, tol=tol)
        if rep.ok:
            return float(lam), w
    return None


def _co_line(F, O, lam, point):
    return reflect_line(F, lam, point, O)


def _other_point(pts, point, what):
    d0 = float(np.linalg.norm(pts[0] - point))
    d1 = float(np.linalg.norm(pts[1] - point))
    if min(d0, d1) < 1e-7:
        return pts[0] if d1 < d0 else pts[1]
    raise DegenerateConfiguration(f"{what}: neither intersection matches the link point")


def tau(ctx, m, data=None):
    """The involution on C_O: reflect O at the other point of O cap Q_m."""
    F = ctx.family
    if data is None:
        data = co_data(ctx, m)
        if data is None:
            raise DegenerateConfiguration("tau is defined on lines meeting O")
    lam, point = data
    count, pts, _ = line_quadric_intersect(F, lam, ctx.O)
    if count != 2:
        raise DegenerateConfiguration(f"O is tangent to Q_{lam}; tau degenerates")
    other = _other_point(pts, point, "tau")
    return _co_line(F, ctx.O, lam, other)


def double_co(ctx, m, data=None):
    """m + m for m in C_O.

    tau(m) = -m crosses Q_m at the point where it meets O and at one
    further point; reflecting tau(m) there yields 2m.
    """
    F = ctx.family
    if data is None:
        data = co_data(ctx, m)
        if data is None:
            raise DegenerateConfiguration("doubling is defined on lines meeting O")
    lam, point = data
    count, pts_o, _ = line_quadric_intersect(F, lam, ctx.O)
    if count != 2:
        raise DegenerateConfiguration(f"O is tangent to Q_{lam}; doubling degenerates")
    other = _other_point(pts_o, point, "double")
    neg = _co_line(F, ctx.O, lam, other)
    count, pts, _ = line_quadric_intersect(F, lam, neg)
    if count != 2:
        raise DegenerateConfiguration("tau(m) is tangent to Q_m; doubling degenerates")
    second = _other_point(pts, other, "double")
    out = reflect_line(F, lam, second, neg)
    # 2m = -(tau(m) + tau(m)): a doubled divisor, both mids on one line
    ctx.cache.put(out, mids=((neg, lam, other), (neg, lam, other)), bag=(m, m))
    return out


def link_data(F, base, m, lam_hint=None, point_hint=None, tol=ALGEBRA_TOL):
    """(lam, point) of the reflection relating base and m.

    The lines must meet; the linking quadric is the elliptic coordinate
    at the common point whose reflection carries base to m.
    """
    if point_hint is not None:
        w = as_point(point_hint, F.d)
    else:
        w = common_point(base, m, tol * max(1.0, F.length_scale))
        if w is None:
            raise LinesNotConcurrent("lines do not meet; no reflection link")
    if lam_hint is not None:
        rep = reflection_law_check(F, lam_hint, w, base, m, tol=tol)
        if not rep.ok:
            raise DegenerateConfiguration(
                f"hinted link lam={lam_hint} fails the reflection law (gap {rep.line_gap:.3e})"
            )
        return float(lam_hint), w
    coords = elliptic_coordinates(F, w)
    for lam, flagged in zip(coords.lam, coords.degenerate):
        if flagged:
            continue
        rep = reflection_law_check(F, lam, w, base, m, tol=tol)
        if rep.ok:
            return float(lam), w
    raise DegenerateConfiguration("no confocal quadric reflects base to m at their meet")


def _fourth_from(F, base, link1, link2, m1, m2, tol=ALGEBRA_TOL):
    """Complete DRC(base, m1, m2, .) and return (fourth, quad)."""
    (mu1, P1), (mu2, P2) = link1, link2
    if abs(mu1 - mu2) < 1e-10 * F.scale:
        raise DegenerateConfiguration("completion needs two distinct linking quadrics")
    quad = build_drc_at(F, mu1, mu2, base, P1, P2)
    if not lines_equal(quad.lines[1], m1, tol):
        raise DegenerateConfiguration("completion failed to reproduce its first input line")
    if not lines_equal(quad.lines[2], m2, tol):
        raise DegenerateConfiguration("completion failed to reproduce its second input line")
    return quad.lines[3], quad


def drc_fourth_from(ctx, base, m1, m2, link1=None, link2=None):
    """Fourth line of the DRC spanned by base and its two reflections.

    Group value: -(base + m1 + m2). Links may carry (lam, point) hints;
    otherwise they are recovered from the common points.
    """
    F = ctx.family
    l1 = link_data(F, base, m1, *(link1 or (None, None)))
    l2 = link_data(F, base, m2, *(link2 or (None, None)))
    fourth, _ = _fourth_from(F, base, (l1[0], l1[1]), (l2[0], l2[1]), m1, m2)
    return fourth


def drc_fourth(ctx, a, b, data_a=None, data_b=None, bag=None):
    """Fourth line of DRC(O, a, b) = -a-b, for a, b meeting O."""
    F = ctx.family
    data_a = data_a or co_data(ctx, a)
    data_b = data_b or co_data(ctx, b)
    if data_a is None or data_b is None:
        raise DegenerateConfiguration("drc_fourth needs lines meeting O")
    if lines_equal(a, b, ALGEBRA_TOL):
        # -2a, via doubling of tau(a)
        return double_co(ctx, tau(ctx, a, data_a))
    if abs(data_a[0] - data_b[0]) < 1e-10 * F.scale:
        # same quadric and distinct lines: b = tau(a), the sum is O
        if not lines_equal(b, tau(ctx, a, data_a), ALGEBRA_TOL):
            raise DegenerateConfiguration("two distinct non-involutive lines on one quadric")
        return ctx.O
    fourth, _ = _fourth_from(F, ctx.O, data_a, data_b, a, b)
    if bag is None:
        bag = (tau(ctx, a, data_a), tau(ctx, b, data_b))
    ctx.cache.put(
        fourth,
        mids=((a, data_a[0], data_a[1]), (b, data_b[0], data_b[1])),
        bag=bag,
    )
    return fourth


def add_co(ctx, s1, s2, data1=None, data2=None):
    """s1 + s2 for two lines meeting O: the fourth line over their taus."""
    data1 = data1 or co_data(ctx, s1)
    data2 = data2 or co_data(ctx, s2)
    if data1 is None or data2 is None:
        raise DegenerateConfiguration("add_co needs lines meeting O")
    if lines_equal(s1, s2, ALGEBRA_TOL):
        return double_co(ctx, s1, data1)
    if abs(data1[0] - data2[0]) < 1e-10 * ctx.family.scale:
        # distinct lines on one quadric: s2 = tau(s1) = -s1
        if not lines_equal(s2, tau(ctx, s1, data1), ALGEBRA_TOL):
            raise DegenerateConfiguration("two distinct non-involutive lines on one quadric")
        return ctx.O
    t1 = tau(ctx, s1, data1)
    t2 = tau(ctx, s2, data2)
    return drc_fourth(ctx, t1, t2, bag=(s1, s2))


def _signed_line_gap(p1, v1, p2, v2):
    cr = np.cross(v1, v2)
    n = np.linalg.norm(cr)
    if n < 1e-8:
        return None
    return float(np.dot(p2 - p1, cr)) / n


def _meeting_scan(ctx, x, span=None, samples=400, tol=1e-7):
    """Reflections of O meeting x: list of (line, lam, point_on_O).

    Walks the arclength parameter of O; at each sample the three
    confocal quadrics through the point give three reflected candidate
    lines, and sign changes of the signed distance to x are bisected.
    Raw (uncanonicalized) reflection directions keep the signed
    distance continuous along each branch.
    """
    F = ctx.family
    O = ctx.O
    pO, vO = O.point, O.direction
    px, vx = x.point, x.direction
    if span is None:
        span = 6.0 * F.length_scale

    def branches(t):
        z = pO + t * vO
        coords = core.elliptic_coords(F.arr, z, 1e-12 * F.scale)
        out = {}
        for j in range(F.d):
            lam = float(coords[0][j])
            if coords[1][j] or min(abs(lam - ai) for ai in F.a) < 1e-7:
                continue
            grad = core.quadric_grad(F.arr, lam, z)
            gn = float(np.linalg.norm(grad))
            if gn < 1e-10:
                continue
            nrm = grad / gn
            dv = float(np.dot(vO, nrm))
            if abs(dv) < 1e-9:
                continue
            r = vO - 2.0 * dv * nrm
            out[j] = (z, lam, r, _signed_line_gap(z, r, px, vx))
        return out

    found = []

    def record(t):
        data = branches(t)
        for j, (z, lam, r, _) in data.items():
            cand = Line.from_point_direction(z, r)
            _, _, dist = closest_approach(cand, x)
            if dist > tol * max(1.0, F.length_scale):
                continue
            if lines_equal(cand, x, ALGEBRA_TOL) or lines_equal(cand, O, ALGEBRA_TOL):
                continue
            if any(lines_equal(cand, f[0], ALGEBRA_TOL) for f in found):
                continue
            if abs(tangency_defect(F, ctx.alphas[0], cand)) > 1e-8 or abs(
                tangency_defect(F, ctx.alphas[1], cand)
            ) > 1e-8:
                continue
            found.append((cand, lam, z))

    ts = np.linspace(-span, span, samples + 1)
    prev = branches(float(ts[0]))
    prev_t = float(ts[0])
    best_near = math.inf
    for t in ts[1:]:
        t = float(t)
        cur = branches(t)
        for j in cur:
            if j not in prev:
                continue
            g0, g1 = prev[j][3], cur[j][3]
            if g0 is None or g1 is None:
                continue
            best_near = min(best_near, abs(g0), abs(g1))
            if g0 == 0.0:
                record(prev_t)
                continue
            if g0 * g1 < 0.0:
                lo, hi, glo = prev_t, t, g0
                for _ in range(80):
                    mid = 0.5 * (lo + hi)
                    bm = branches(mid)
                    if j not in bm or bm[j][3] is None:
                        break
                    gm = bm[j][3]
                    if glo * gm <= 0.0:
                        hi = mid
                    else:
                        lo, glo = mid, gm
                record(0.5 * (lo + hi))
        prev, prev_t = cur, t
    return found, best_near


def _divisor_pair(ctx, x, expect=None):
    """A pair (p, q) of C_O lines forming a DRC with O and x.

    Many family lines can meet both O and x, and more than one pair of
    them can complete a DRC whose fourth line is x; such pairs need not
    represent the same group element (even the line of the negative can
    agree while sums differ). When expect = (r, r_data, back) is given,
    only pairs are kept for which the partial addition of r to x,
    carried out through the candidate pair, lands on the line back;
    with r = tau(s) and back = x' this cancels the construction
    z = s + x' and pins the decomposition to the element z was built
    as. Returns ((p, lam_p, z_p), (q, lam_q, z_q)).
    """
    F = ctx.family
    if lines_equal(x, ctx.O, 1e-9):
        raise ValidationError("x = O: the divisor is not defined")
    found, best = _meeting_scan(ctx, x)
    if len(found) < 2:
        found, best = _meeting_scan(ctx, x, span=18.0 * ctx.family.length_scale, samples=1200)
    if not found:
        raise SearchFailed(f"no line meets both O and x (closest approach {best:.3e})")
    found.sort(key=lambda f: tuple(np.round((*f[0].p, *f[0].v), 10)))
    if len(found) == 1:
        return found[0], found[0]
    pairs = []
    for i in range(len(found)):
        for j in range(i + 1, len(found)):
            (p, lp, zp), (q, lq, zq) = found[i], found[j]
            if abs(lp - lq) < 1e-9 * F.scale:
                continue
            try:
                fourth, _ = _fourth_from(F, ctx.O, (lp, zp), (lq, zq), p, q)
            except (DegenerateConfiguration, LinesNotConcurrent):
                continue
            if lines_equal(fourth, x, ALGEBRA_TOL):
                pairs.append((found[i], found[j]))
    if not pairs:
        raise SearchFailed(
            f"{len(found)} lines meet O and x but no pair completes to a DRC with them"
        )
    if expect is not None:
        r, r_data, back = expect
        kept = []
        for pr in pairs:
            try:
                cand = _star_step(ctx, r, r_data, pr)
            except (DegenerateConfiguration, LinesNotConcurrent, SearchFailed):
                continue
            if lines_equal(cand, back, ALGEBRA_TOL):
                kept.append(pr)
        if not kept:
            raise SearchFailed(
                f"{len(pairs)} pairs complete the divisor of x but none passes "
                "the cancellation check of the element x was built as"
            )
        pairs = kept
    return pairs[0]


def _mids_of(ctx, x):
    """Divisor pair of x, honoring how x was constructed.

    An exact pair recorded at construction wins. A line known only as
    a formal sum of C_O elements is decomposed by search, kept honest
    by cancelling the leading summand against the rest of the bag; the
    divisor points of such sums are often complex conjugate, in which
    case no real pair exists and the search reports that. A line never
    seen before is pinned to the first completing pair and cached.
    """
    rec = ctx.cache.find(x) or {}
    if rec.get("mids") is not None:
        return rec["mids"]
    bag = rec.get("bag")
    if bag is not None and len(bag) >= 2:
        r = tau(ctx, bag[0])
        back = _sum_line(ctx, bag[1:])
        pair = _divisor_pair(ctx, x, expect=(r, co_data(ctx, r), back))
    else:
        pair = _divisor_pair(ctx, x)
    ctx.cache.put(x, mids=pair)
    return pair


def _bag_of(ctx, x):
    """Formal C_O summands of x; foreign lines are pinned by search."""
    rec = ctx.cache.find(x) or {}
    bag = rec.get("bag")
    if bag is not None:
        return bag
    (p, lp, zp), (q, lq, zq) = _mids_of(ctx, x)
    bag = (tau(ctx, p, (lp, zp)), tau(ctx, q, (lq, zq)))
    ctx.cache.put(x, bag=bag)
    return bag


def _register_sum(ctx, out, bag):
    if not lines_equal(out, ctx.O, 1e-9) and co_data(ctx, out) is None:
        ctx.cache.put(out, bag=tuple(bag))
    return out


def _even_quad(ctx, u1, u2, y):
    """(u1 + u2) + y for C_O elements u_i and a two-sum y, in one quad.

    -y is the fourth line over y's divisor pair, so its own pair is
    exact, and c_i = tau(u_i) + (-y) comes out of a single completion
    step. Each c_i meets y because c_i + y = tau(u_i) lies in C_O, and
    the DRC over them based at y closes at -(y + c1 + c2) = u1 + u2 + y.
    No intermediate needs a searched divisor pair.
    """
    F = ctx.family
    ny = negate(ctx, y)
    nmids = _mids_of(ctx, ny)
    c1 = _star_step(ctx, tau(ctx, u1), None, nmids)
    c2 = _star_step(ctx, tau(ctx, u2), None, nmids)
    out, _ = _fourth_from(
        F, y, link_data(F, y, c1), link_data(F, y, c2), c1, c2
    )
    return out


def _reduce_bag(ctx, cos):
    """Cancel tau-pairs: two distinct C_O lines on one quadric sum to O."""
    cos = list(cos)
    i = 0
    while i < len(cos):
        di = co_data(ctx, cos[i])
        hit = False
        for j in range(i + 1, len(cos)):
            dj = co_data(ctx, cos[j])
            if abs(di[0] - dj[0]) < 1e-10 * ctx.family.scale and not lines_equal(
                cos[i], cos[j], ALGEBRA_TOL
            ):
                del cos[j]
                del cos[i]
                hit = True
                break
        if not hit:
            i += 1
    return tuple(cos)


def _sum_line(ctx, cos):
    """Line of a formal sum of C_O elements, through exact quad webs.

    Two summands are a single completion; three go through the divisor
    pair of a two-sum; four are grouped (u1 + u2) + (y1 + y2) and close
    in one DRC based at the two-sum y. Beyond four the remainder after
    peeling one summand has to be decomposed by search, which fails
    whenever its divisor points are not real.
    """
    cos = _reduce_bag(ctx, cos)
    n = len(cos)
    if n == 0:
        return ctx.O
    if n == 1:
        return cos[0]
    if n == 2:
        return add_co(ctx, cos[0], cos[1])
    if n == 3:
        x = add_co(ctx, cos[1], cos[2])
        if lines_equal(x, ctx.O, 1e-9):
            return cos[0]
        out = _star_step(ctx, cos[0], None, _mids_of(ctx, x))
        return _register_sum(ctx, out, cos)
    if n == 4:
        # a grouping whose leading pair is two distinct lines keeps the
        # quad mids c_1, c_2 apart
        for i, j, k, l in ((0, 1, 2, 3), (0, 2, 1, 3), (0, 3, 1, 2)):
            u1, u2, y1, y2 = cos[i], cos[j], cos[k], cos[l]
            if lines_equal(u1, u2, ALGEBRA_TOL):
                continue
            du1, du2 = co_data(ctx, u1), co_data(ctx, u2)
            if abs(du1[0] - du2[0]) < 1e-10 * ctx.family.scale:
                # u2 = tau(u1): the leading pair cancels
                return _sum_line(ctx, (y1, y2))
            y = add_co(ctx, y1, y2)
            if lines_equal(y, ctx.O, 1e-9):
                return add_co(ctx, u1, u2, du1, du2)
            out = _even_quad(ctx, u1, u2, y)
            return _register_sum(ctx, out, cos)
        raise SearchFailed(
            "all groupings of the four summands lead off a repeated line; "
            "the completion degenerates"
        )
    rest = _sum_line(ctx, cos[1:])
    if lines_equal(rest, ctx.O, 1e-9):
        return cos[0]
    if co_data(ctx, rest) is not None:
        return add_co(ctx, cos[0], rest)
    out = _star_step(ctx, cos[0], None, _mids_of(ctx, rest))
    return _register_sum(ctx, out, cos)


def lines_meeting(ctx, x):
    """The two family lines completing the divisor of O and x.

    They meet both O and x, and the four lines form a double
    reflection configuration, so x = -(p + q) in the group.
    """
    if co_data(ctx, x) is not None:
        raise DegenerateConfiguration(
            "x meets O, the divisor degenerates; use the C_O operations directly"
        )
    pq = _mids_of(ctx, x)
    out = [pq[0][0], pq[1][0]]
    gate = ALGEBRA_TOL * max(1.0, ctx.family.length_scale)
    for m in out:
        if closest_approach(m, x)[2] > gate or closest_approach(m, ctx.O)[2] > gate:
            raise SearchFailed("cached divisor pair drifted off its lines")
    return out


def _decompose(ctx, x):
    """x = s1 + s2 with s1, s2 in C_O (the taus of the divisor pair)."""
    (p, lp, zp), (q, lq, zq) = _mids_of(ctx, x)
    return [(tau(ctx, p, (lp, zp)), None), (tau(ctx, q, (lq, zq)), None)]


def negate(ctx, x):
    """The group inverse: tau on C_O, elsewhere the sum of the divisor
    pair (x is the fourth DRC line over it, so x + p + q = O)."""
    if lines_equal(x, ctx.O, 1e-9):
        return ctx.O
    data = co_data(ctx, x)
    if data is not None:
        return tau(ctx, x, data)
    rec = ctx.cache.find(x) or {}
    mids = rec.get("mids")
    if mids is None and rec.get("bag") is not None and len(rec["bag"]) > 2:
        return _sum_line(ctx, tuple(tau(ctx, b) for b in rec["bag"]))
    (p, lp, zp), (q, lq, zq) = mids if mids is not None else _mids_of(ctx, x)
    if lines_equal(p, q, ALGEBRA_TOL):
        # x = -2p, so -x = 2p
        return double_co(ctx, p, (lp, zp))
    return add_co(ctx, p, q, (lp, zp), (lq, zq))


def _star_step(ctx, s, s_data, mids):
    """The line of s + x for x given by its divisor pair (two-step DRC)."""
    F = ctx.family
    s_data = s_data or co_data(ctx, s)
    (pm, lp, zp), (qm, lq, zq) = mids
    p = tau(ctx, pm, (lp, zp))
    q = tau(ctx, qm, (lq, zq))
    neg_s = tau(ctx, s, s_data)
    if lines_equal(p, neg_s, ALGEBRA_TOL):
        return q
    if lines_equal(q, neg_s, ALGEBRA_TOL):
        return p
    if lines_equal(p, q, ALGEBRA_TOL):
        if lines_equal(s, p, ALGEBRA_TOL):
            raise SearchFailed(
                "s + 2s keeps a repeated summand; no grouping separates the mids"
            )
        # x = 2p: chain through s + p, which meets neither special case
        w = add_co(ctx, s, p, s_data)
        return partial_add(ctx, p, w)
    p1 = drc_fourth(ctx, s, p, s_data)
    q1 = drc_fourth(ctx, s, q, s_data)
    # the completions meet s with known links: p1 on the quadric of p,
    # q1 on the quadric of q
    z, _ = _fourth_from(
        F,
        s,
        link_data(F, s, p1),
        link_data(F, s, q1),
        p1,
        q1,
    )
    return z


def partial_add(ctx, s, x, s_data=None):
    """s + x for s in C_O; x is handled the way it was constructed.

    A two-sum x goes through its divisor pair directly. A longer
    formal sum is reassociated so that only divisor pairs of two-sums
    enter; a line with no record is pinned to a searched pair first.
    """
    s_data = s_data or co_data(ctx, s)
    if s_data is None:
        raise DegenerateConfiguration("partial_add needs s in C_O")
    if lines_equal(x, ctx.O, 1e-9):
        return s
    dx = co_data(ctx, x)
    if dx is not None:
        return add_co(ctx, s, x, s_data, dx)
    rec = ctx.cache.find(x) or {}
    bag = rec.get("bag")
    if bag is not None and len(bag) > 2:
        return _sum_line(ctx, (s,) + tuple(bag))
    pair = rec.get("mids")
    if pair is None:
        pair = _mids_of(ctx, x)
    out = _star_step(ctx, s, s_data, pair)
    if bag is None:
        (p, lp, zp), (q, lq, zq) = pair
        bag = (tau(ctx, p, (lp, zp)), tau(ctx, q, (lq, zq)))
    return _register_sum(ctx, out, (s,) + tuple(bag))


def add(ctx, x, y):
    """The commutative group operation with neutral O."""
    if lines_equal(x, ctx.O, 1e-9):
        return y
    if lines_equal(y, ctx.O, 1e-9):
        return x
    dx = co_data(ctx, x)
    dy = co_data(ctx, y)
    if dx is not None and dy is not None:
        return add_co(ctx, x, y, dx, dy)
    if dx is not None:
        return partial_add(ctx, x, y, dx)
    if dy is not None:
        return partial_add(ctx, y, x, dy)
    # x = s1 + s2 + ...: fold the summands in, s1 + (s2 + (... + y))
    out = y
    for s in reversed(_bag_of(ctx, x)):
        out = partial_add(ctx, s, out)
    return out


def drc_sum_check(ctx, quad, tol=ALGEBRA_TOL):
    """Group sum of the four lines of a DRC; should be the neutral.

    When the quad is based at O its fourth line is recorded with the
    quad's own mids first, so the sum is evaluated in the element
    assignment the quad itself defines.
    """
    a, b, c, d = quad.lines
    if lines_equal(a, ctx.O, 1e-9) and ctx.cache.find(d) is None:
        try:
            db, dc = co_data(ctx, b), co_data(ctx, c)
            if db is not None and dc is not None:
                ctx.cache.put(
                    d,
                    mids=((b, db[0], db[1]), (c, dc[0], dc[1])),
                    bag=(tau(ctx, b, db), tau(ctx, c, dc)),
                )
        except (DegenerateConfiguration, LinesNotConcurrent):
            pass
    total = add(ctx, add(ctx, a, b), add(ctx, c, d))
    return lines_equal(total, ctx.O, tol), total


def divisor_D(ctx, traj, tol=ALGEBRA_TOL):
    """Divisor representation: one line meeting O per trajectory segment.

    The k-th output is obtained by sliding the k-th segment down the
    trajectory through DRC completions until it meets the initial
    segment O; its linking quadric is the k-th reflection quadric.
    """
    F = ctx.family
    segs = traj.segments
    if not lines_equal(segs[0], ctx.O, tol):
        raise ValidationError("trajectory must start along the neutral line O")
    n = traj.n
    lams = traj.bounce_params
    out = []
    for k in range(1, n + 1):
        cur = segs[k]
        link_cur = (lams[k - 1], traj.point(k))
        for j in range(k - 1, 0, -1):
            base = segs[j]
            link1 = (lams[j - 1], traj.point(j))
            quad_link1 = link_data(F, base, segs[j - 1], *link1)
            quad_link2 = link_data(F, base, cur, *link_cur)
            cur, quad = _fourth_from(F, base, quad_link1, quad_link2, segs[j - 1], cur)
            # the new line meets segs[j-1] at the quad's y2 vertex, still
            # linked through the k-th reflection quadric
            link_cur = (lams[k - 1], np.array(quad.y2))
        out.append(cur)
    return out


def billiard_B(ctx, lines, tol=ALGEBRA_TOL):
    """Rebuild a trajectory from divisor lines (inverse of divisor_D)."""
    F = ctx.family
    n = len(lines)
    if n == 0:
        raise ValidationError("empty divisor")
    datas = []
    for m in lines:
        d = co_data(ctx, m, tol)
        if d is None:
            raise DegenerateConfiguration("every divisor line must meet O with the reflection law")
        datas.append(d)
    segs = [ctx.O, lines[0]]
    lams = [datas[0][0]]
    meets = [np.asarray(datas[0][1])]
    for k in range(2, n + 1):
        cur = lines[k - 1]
        link_cur = (datas[k - 1][0], np.asarray(datas[k - 1][1]))
        for j in range(1, k):
            base = segs[j - 1]
            l1 = link_data(F, base, segs[j], lams[j - 1], meets[j - 1])
            l2 = link_data(F, base, cur, *link_cur)
            cur, quad = _fourth_from(F, base, l1, l2, segs[j], cur)
            link_cur = (link_cur[0], np.array(quad.y2))
        segs.append(cur)
        lams.append(link_cur[0])
        meets.append(np.asarray(link_cur[1]))
    # orient into a trajectory: x_k = meets[k-1], directions chosen to
    # run forward and to satisfy the real or virtual law at each vertex
    pts = [np.asarray(m, dtype=float) for m in meets]
    v0 = ctx.O.direction
    if n >= 2:
        to_next = pts[1] - pts[0]
        r = core.reflect_dir(F.arr, lams[0], pts[0], v0)
        if float(np.dot(r, to_next)) < 0.0:
            v0 = -v0
    dirs = [v0]
    x = pts[0]
    v = v0
    for k in range(n):
        v = core.reflect_dir(F.arr, lams[k], pts[k], v)
        if k + 1 < n:
            to_next = pts[k + 1] - pts[k]
            if float(np.dot(v, to_next)) < 0.0:
                v = -v  # virtual branch keeps the chain geometric
        dirs.append(v)
    points = [pts[0] - dirs[0]] + pts
    return _make_trajectory(F, points, dirs, lams)


@dataclass(frozen=True)
class SkewClass:
    """Minimal confocal-reflection connection between two family lines."""

    s: int
    connecting_quadrics: tuple
    connecting_trajectory: Trajectory


def _one_bounce_trajectory(F, start, w, v_in, v_out, lam):
    return _make_trajectory(F, [start, w], [v_in, v_out], [lam])


def s_skew(ctx, x, y, tol=1e-8):
    """Skew classification: -1 equal, 0 intersecting, 1 one intermediate.

    The s = 1 search scans reflections of x at confocal quadrics through
    its points for one whose image meets y; the result is returned as a
    replayable two-bounce trajectory (virtual reflections permitted).
    """
    F = ctx.family
    for ell in (x, y):
        if not in_family(ctx, ell, 1e-6):
            raise CausticMismatch("both lines must share the context caustics")
    if lines_equal(x, y, tol):
        traj = _make_trajectory(F, [x.point], [x.direction], [])
        return SkewClass(-1, (), traj)
    w = common_point(x, y, tol * max(1.0, F.length_scale))
    if w is not None:
        lam, w = link_data(F, x, y, None, w)
        v_in = x.direction
        start = w - v_in
        v_out = core.reflect_dir(F.arr, lam, w, v_in)
        traj = _one_bounce_trajectory(F, start, w, v_in, v_out, lam)
        return SkewClass(0, (float(lam),), traj)

    class _Probe:
        # the scan only needs the family, a carrier line, and the caustics
        family = F
        O = x
        alphas = ctx.alphas

    found, best = _meeting_scan(_Probe, y)
    if not found:
        found, best = _meeting_scan(_Probe, y, span=18.0 * F.length_scale, samples=1200)
    if not found:
        raise SearchFailed(
            f"no single-intermediate connection found (closest approach {best:.3e})"
        )
    mid, lam1, z = found[0]
    lam2, w2 = link_data(F, mid, y)
    v_in = x.direction
    r1 = core.reflect_dir(F.arr, lam1, z, v_in)
    if float(np.dot(r1, w2 - z)) < 0.0:
        v_in = -v_in
        r1 = core.reflect_dir(F.arr, lam1, z, v_in)
    r2 = core.reflect_dir(F.arr, lam2, w2, r1)
    start = z - v_in
    traj = _make_trajectory(F, [start, z, w2], [v_in, r1, r2], [lam1, lam2])
    return SkewClass(1, (float(lam1), float(lam2)), traj)


def replay_skew(ctx, x, y, sk, tol=ALGEBRA_TOL):
    """Verify a SkewClass: laws at every vertex, endpoints on x and y."""
    F = ctx.family
    traj = sk.connecting_trajectory
    if sk.s == -1:
        return lines_equal(x, y, tol)
    if not lines_equal(traj.segment(0), x, tol):
        return False
    for k, lam in enumerate(traj.bounce_params):
        rep = reflection_law_check(F, lam, traj.point(k + 1),
                                   traj.segment(k), traj.segment(k + 1), tol=tol)
        if not rep.ok:
            return False
    return lines_equal(traj.segment(len(traj.bounce_params)), y, tol)


@dataclass(frozen=True)
class StarConfiguration:
    """Twelve tangent planes over eight lines, with their index structure.

    lines: (O, p, q, s, p1, q1, nx, z) where p1 = -(s+p), q1 = -(s+q),
    nx = -(p+q), z = s+p+q. planes[i] touches quadrics[i] at points[i];
    triplets lists, per line, its three planes (touch points collinear
    on that line); quadruplets are the six pencils.
    """

    lines: tuple
    planes: tuple
    points: tuple
    quadrics: tuple
    triplets: tuple
    quadruplets: tuple
    triplet_residuals: tuple
    pencil_ratios: tuple
    law_gaps: tuple


def star_configuration(ctx, p, q, s, tol=ALGEBRA_TOL):
    """The 12-plane configuration spanned by three reflections of O."""
    F = ctx.family
    dp, dq, ds = co_data(ctx, p), co_data(ctx, q), co_data(ctx, s)
    if dp is None or dq is None or ds is None:
        raise ValidationError("p, q, s must be reflections of O")
    lam_p, lam_q, lam_s = dp[0], dq[0], ds[0]
    gap = min(abs(lam_p - lam_q), abs(lam_p - lam_s), abs(lam_q - lam_s))
    if gap < 1e-8 * F.scale:
        raise DegenerateConfiguration("p, q, s must come from three distinct quadrics")

    p1 = drc_fourth(ctx, s, p, ds, dp)
    q1 = drc_fourth(ctx, s, q, ds, dq)
    nx = drc_fourth(ctx, p, q, dp, dq)
    z, _ = _fourth_from(
        F, s, link_data(F, s, p1), link_data(F, s, q1), p1, q1
    )
    names = ("O", "p", "q", "s", "p1", "q1", "nx", "z")
    lines = (ctx.O, p, q, s, p1, q1, nx, z)
    idx = {nm: i for i, nm in enumerate(names)}

    # the twelve reflection-linked pairs, grouped by linking quadric
    pair_table = (
        (("O", "p"), lam_p), (("q", "nx"), lam_p), (("s", "p1"), lam_p), (("q1", "z"), lam_p),
        (("O", "q"), lam_q), (("p", "nx"), lam_q), (("s", "q1"), lam_q), (("p1", "z"), lam_q),
        (("O", "s"), lam_s), (("p", "p1"), lam_s), (("q", "q1"), lam_s), (("nx", "z"), lam_s),
    )
    planes = []
    touch_points = []
    quadrics = []
    law_gaps = []
    for (na, nb), lam in pair_table:
        la, lb = lines[idx[na]], lines[idx[nb]]
        w = common_point(la, lb, tol * max(1.0, F.length_scale))
        if w is None:
            raise DegenerateConfiguration(f"lines {na} and {nb} fail to meet")
        rep = reflection_law_check(F, lam, w, la, lb, tol=tol)
        if not rep.ok:
            raise DegenerateConfiguration(
                f"pair ({na}, {nb}) violates the law on its quadric (gap {rep.line_gap:.3e})"
            )
        planes.append(tangent_hyperplane(F, lam, w))
        touch_points.append(tuple(w))
        quadrics.append(float(lam))
        law_gaps.append(rep.line_gap)

    pair_index = {}
    for i, ((na, nb), _) in enumerate(pair_table):
        pair_index[(na, nb)] = i
        pair_index[(nb, na)] = i

    triplets = []
    triplet_residuals = []
    for nm in names:
        members = tuple(i for i, ((na, nb), _) in enumerate(pair_table) if nm in (na, nb))
        triplets.append(members)
        pts = np.array([touch_points[i] for i in members])
        rel = pts - pts.mean(axis=0)
        sv = np.linalg.svd(rel, compute_uv=False)
        triplet_residuals.append(float(sv[1] / sv[0]) if sv[0] > 1e-14 else 0.0)

    quad_table = (
        (("O", "p"), ("q", "nx"), ("O", "q"), ("p", "nx")),
        (("O", "p"), ("s", "p1"), ("O", "s"), ("p", "p1")),
        (("O", "q"), ("s", "q1"), ("O", "s"), ("q", "q1")),
        (("s", "p1"), ("q1", "z"), ("s", "q1"), ("p1", "z")),
        (("q", "nx"), ("q1", "z"), ("q", "q1"), ("nx", "z")),
        (("p", "nx"), ("p1", "z"), ("p", "p1"), ("nx", "z")),
    )
    quadruplets = []
    pencil_ratios = []
    for quad_pairs in quad_table:
        members = tuple(pair_index[pr] for pr in quad_pairs)
        quadruplets.append(members)
        rep = pencil_check([planes[i] for i in members])
        pencil_ratios.append(rep.ratio)

    return StarConfiguration(
        lines=lines,
        planes=tuple(planes),
        points=tuple(touch_points),
        quadrics=tuple(quadrics),
        triplets=tuple(triplets),
        quadruplets=tuple(quadruplets),
        triplet_residuals=tuple(triplet_residuals),
        pencil_ratios=tuple(pencil_ratios),
        law_gaps=tuple(law_gaps),
    )
