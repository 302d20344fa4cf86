"""Interactive smoke checks for the genus-2 algebra module."""
import numpy as np

from confocal_billiards.confocal import ConfocalFamily, Line, lines_equal, caustics_of_line
from confocal_billiards.trajectory import simulate, simulate_sequence
from confocal_billiards import algebra3d as alg
from confocal_billiards import core

rng = np.random.default_rng(7)
F = ConfocalFamily((1.0, 2.0, 3.0))

# a generic trajectory supplies the neutral line and its caustics
x0 = np.array([0.3, -0.45, 0.55])
x0 /= np.sqrt(np.sum(x0 * x0 / F.arr))
v0 = np.array([0.7, 0.4, -0.58])
v0 /= np.linalg.norm(v0)
g = core.quadric_grad(F.arr, 0.0, x0)
if np.dot(v0, g) > 0:
    v0 = v0 - 2 * np.dot(v0, g) / np.dot(g, g) * g
    v0 /= np.linalg.norm(v0)

traj = simulate(F, x0, v0, 10)
O = traj.segment(0)
alphas = traj.caustics.alpha
print("caustics:", alphas, "flags:", traj.caustics.degenerate_flags)

ctx = alg.new_context(F, alphas[0], alphas[1], O)
print("Q_O =", ctx.Q_O, "degenerate:", ctx.degenerate)
print("pi =", np.round(ctx.pi.u, 6), "T =", np.round(ctx.T, 6))
TOL = alg.ALGEBRA_TOL


def co_elem(t, branch):
    z = O.at(t)
    coords = core.elliptic_coords(F.arr, z, 1e-12)
    lam = float(coords[0][branch])
    assert not coords[1][branch], f"degenerate coord at t={t}"
    from confocal_billiards.reflection import reflect_line
    return reflect_line(F, lam, z, O)


def check(name, ok):
    print(f"  {name}: {'ok' if ok else 'FAIL'}")
    assert ok, name


s1 = co_elem(-0.7, 0)
s2 = co_elem(0.9, 1)
s3 = co_elem(1.3, 2)
s4 = co_elem(0.35, 0)

print("tau / doubling:")
check("tau involution", lines_equal(alg.tau(ctx, alg.tau(ctx, s1)), s1, 1e-9))
check("negate on C_O = tau", lines_equal(alg.negate(ctx, s2), alg.tau(ctx, s2), 1e-9))

print("add_co:")
x12 = alg.add_co(ctx, s1, s2)
x21 = alg.add_co(ctx, s2, s1)
check("commutes", lines_equal(x12, x21, TOL))
check("s + O = s", lines_equal(alg.add(ctx, s1, O), s1, TOL))

print("negate / inverse:")
nx = alg.negate(ctx, x12)
check("involution", lines_equal(alg.negate(ctx, nx), x12, TOL))
check("x + (-x) = O", lines_equal(alg.add(ctx, x12, nx), O, TOL))
z3 = alg.add(ctx, x12, s3)
check("3-sum inverse", lines_equal(alg.add(ctx, z3, alg.negate(ctx, z3)), O, TOL))

print("associativity / general add:")
lhs = alg.add(ctx, alg.add_co(ctx, s1, s2), s3)
rhs = alg.add(ctx, s1, alg.add_co(ctx, s2, s3))
check("(s1+s2)+s3 = s1+(s2+s3)", lines_equal(lhs, rhs, TOL))
x34 = alg.add_co(ctx, s3, s4)
y = alg.add(ctx, x12, x34)
y2 = alg.add(ctx, alg.add(ctx, x12, s3), s4)
check("general x+y two routes", lines_equal(y, y2, TOL))
y3 = alg.add(ctx, alg.add_co(ctx, s1, s3), alg.add_co(ctx, s2, s4))
check("partition independence", lines_equal(y, y3, TOL))
check("commutativity general", lines_equal(alg.add(ctx, x12, s3), alg.add(ctx, s3, x12), TOL))
check("commutativity two-sums", lines_equal(alg.add(ctx, x12, x34), alg.add(ctx, x34, x12), TOL))
check("4-sum inverse", lines_equal(alg.add(ctx, y, alg.negate(ctx, y)), O, TOL))

print("saglasnost:")
z1 = alg.add(ctx, s1, x34)
lam_link, _ = alg.link_data(F, z1, alg.negate(ctx, x34))
check("s + x meets -x on Q_s", abs(lam_link - alg.co_data(ctx, s1)[0]) < 1e-6)

print("sum of negatives:")
n_all = alg.negate(ctx, alg.add(ctx, alg.add_co(ctx, s1, s2), s3))
m_all = alg.add(ctx, alg.add_co(ctx, alg.negate(ctx, s1), alg.negate(ctx, s3)), alg.negate(ctx, s2))
check("-(p+q+s) = (-p)+(-q)+(-s)", lines_equal(n_all, m_all, TOL))

print("divisor / billiard words:")
# the sliding completions need pairwise distinct reflection quadrics
mtraj = simulate_sequence(F, x0, v0, [0.0, -0.8, 1.3, 1.7])
D = alg.divisor_D(ctx, mtraj)
links = [alg.co_data(ctx, ell) for ell in D]
print("  divisor links:", [round(l, 6) for l, _ in links])
check(
    "links are the bounce quadrics",
    max(abs(l - b) for (l, _), b in zip(links, mtraj.bounce_params)) < 1e-7,
)
back = alg.billiard_B(ctx, D)
print("  reconstructed bounces:", back.n)
check(
    "billiard word inverts divisor",
    all(lines_equal(back.segment(k), mtraj.segment(k), 1e-7) for k in range(back.n + 1)),
)

print("segment formula:")
S3 = alg.add(ctx, alg.add(ctx, D[0], D[1]), D[2])
check("l3 = +(D1+D2+D3)", lines_equal(S3, mtraj.segment(3), TOL))
S4 = alg.add(ctx, S3, D[3])
check("l4 = -(D1+D2+D3+D4)", lines_equal(alg.negate(ctx, S4), mtraj.segment(4), TOL))

print("skew classes:")
sk0 = alg.s_skew(ctx, s1, alg.tau(ctx, s1))
print("  s(s1, tau s1) =", sk0.s)
rep = alg.replay_skew(ctx, s1, alg.tau(ctx, s1), sk0)
check("replay tau pair", rep)
sk1 = alg.s_skew(ctx, s1, s2)
print("  s(s1, s2) =", sk1.s)
check("replay generic pair", alg.replay_skew(ctx, s1, s2, sk1))

print("star configuration:")
star = alg.star_configuration(ctx, s1, s2, s3)
check("24 incidences", len(star.triplets) == 8 and len(star.quadruplets) == 6)
check("pencil ratios", max(star.pencil_ratios) < 1e-6)
check("law gaps", max(star.law_gaps) < 1e-6)
check("triplet residuals", max(star.triplet_residuals) < 1e-6)

print("all smoke checks passed")
