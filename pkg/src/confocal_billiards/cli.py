"""Command line interface.

Each subcommand runs one module pipeline on a validated RunConfig,
collects numerical checks (value against threshold), and writes a JSON
report plus optional SVG/CSV artifacts into the output directory. The
exit code is 0 when every check passed, 1 when a check failed, and the
error class code otherwise (see --help for the table).

Randomness (start states, element draws) comes from one generator
seeded by the config, so identical config and seed give identical
reports apart from the meta block.
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import core
from .algebra3d import (
    ALGEBRA_TOL,
    add,
    add_co,
    negate,
    new_context,
    partial_add,
    star_configuration,
)
from .cayley import caustic_search, cayley_periodic, cayley_weak
from .config import RunConfig, emit_config, parse_config
from .confocal import (
    ConfocalFamily,
    Line,
    caustic_ordering_ok,
    caustics_of_line,
    elliptic_coordinates,
    line_distance,
    line_quadric_intersect,
    tangency_defect,
    tangent_directions,
)
from .errors import (
    ERROR_CLASSES,
    BilliardError,
    DegenerateConfiguration,
    ParseError,
    SearchFailed,
    ValidationError,
)
from .grid import classify_grid, collect_grid, fit_confocal
from .reflection import build_drc, drc_verify, reflect_line
from .report import (
    check_eq,
    check_leq,
    new_report,
    write_points_csv,
    write_report,
)
from .svgfig import Scene, render_svg
from .trajectory import (
    caustic_drift,
    classify_winding_2d,
    closure_gap,
    detect_closure,
    simulate,
    to_record,
)

COMMAND_NAMES = (
    "simulate",
    "caustics",
    "cayley-check",
    "cayley-weak",
    "cayley-search",
    "drc",
    "algebra",
    "star",
    "grid",
    "render",
)

_D3_DEFAULT = (1.0, 2.0, 3.0)


# ---------------------------------------------------------------- state draws


def _project_boundary(F, lam, x):
    x = np.asarray(x, dtype=float)
    q = core.quadric_value(F.arr, lam, x) + 1.0
    if q <= 0.0:
        raise ValidationError("start_point cannot be scaled onto the boundary quadric")
    return x / np.sqrt(q)


def _inward(F, lam, x, v):
    v = np.asarray(v, dtype=float)
    nrm = float(np.linalg.norm(v))
    if nrm < 1e-12:
        raise ValidationError("start_direction must be nonzero")
    v = v / nrm
    g = core.quadric_grad(F.arr, lam, x)
    if float(np.dot(v, g)) > 0.0:
        v = -v
    return v


def _random_state(F, lam, rng):
    for _ in range(64):
        x = rng.standard_normal(F.d)
        if float(np.linalg.norm(x)) < 1e-6:
            continue
        x = _project_boundary(F, lam, x)
        v = rng.standard_normal(F.d)
        if float(np.linalg.norm(v)) < 1e-6:
            continue
        g = core.quadric_grad(F.arr, lam, x)
        if abs(float(np.dot(v / np.linalg.norm(v), g))) < 1e-9:
            continue
        return x, _inward(F, lam, x, v)
    raise SearchFailed("no usable random start state after 64 draws")


def _start_state(cfg, F, rng):
    lam = cfg.boundary
    if cfg.start_point is None:
        x, v = _random_state(F, lam, rng)
        if cfg.start_direction is not None:
            v = _inward(F, lam, x, cfg.start_direction)
        return x, v
    x = _project_boundary(F, lam, cfg.start_point)
    if cfg.start_direction is not None:
        v = _inward(F, lam, x, cfg.start_direction)
    else:
        _, v = _random_state(F, lam, rng)
        v = _inward(F, lam, x, v)
    return x, v


def _drawable_conics(F, lams):
    out = []
    for lam in lams:
        lam = float(lam)
        if lam >= F.a[1] or abs(lam - F.a[0]) < 1e-9:
            continue
        if all(abs(lam - seen) > 1e-12 for seen in out):
            out.append(lam)
    return tuple(out)


def _orbit_scene(F, cfg, traj, point_sets=()):
    if F.d != 2:
        # space results are drawn as plane projections only
        path = tuple(tuple(p[:2]) for p in traj.points)
        return Scene(semiaxes=None, paths=(path,), point_sets=tuple(point_sets))
    conics = _drawable_conics(F, (cfg.boundary, *traj.caustics.alpha))
    path = tuple(tuple(p) for p in traj.points)
    return Scene(
        semiaxes=F.a,
        conics=conics,
        paths=(path,),
        point_sets=tuple(point_sets),
    )


# ------------------------------------------------------------------- commands


def _cmd_simulate(cfg, rng):
    F = ConfocalFamily(cfg.semiaxes)
    x0, v0 = _start_state(cfg, F, rng)
    traj = simulate(F, x0, v0, cfg.bounces, lam=cfg.boundary)
    drift = caustic_drift(traj)
    checks = [check_leq("caustic_drift", drift, cfg.tol("drift", 1e-8))]
    closure = detect_closure(traj, cfg.tol("closure", 1e-7))
    results = {
        "caustics": traj.caustics.alpha,
        "caustic_drift": drift,
        "closure": None if closure is None else {"period": closure[0], "gap": closure[1]},
        "trajectory": to_record(traj),
    }
    expect = cfg.options.get("expect_period")
    if expect is not None:
        k = int(expect)
        if k > traj.n:
            raise ValidationError(f"expect_period {k} exceeds the bounce count")
        checks.append(check_leq(f"closure_gap_n{k}", closure_gap(traj, k), cfg.tol("closure", 1e-7)))
    if F.d == 2:
        try:
            w = classify_winding_2d(traj)
            results["winding"] = {"kind": w.kind, "winding": w.winding, "consistent": w.consistent}
        except BilliardError:
            pass
    scene = _orbit_scene(F, cfg, traj)
    header = ["k"] + [f"x{i + 1}" for i in range(F.d)] + ["lam"]
    # bounce_params[j] is the quadric of the reflection at point j+1
    rows = [
        (k, *traj.point(k), cfg.boundary if k == 0 else traj.bounce_params[k - 1])
        for k in range(traj.n + 1)
    ]
    return results, checks, scene, (header, rows)


def _cmd_caustics(cfg, rng):
    F = ConfocalFamily(cfg.semiaxes)
    x0, v0 = _start_state(cfg, F, rng)
    ell = Line.from_point_direction(x0, v0)
    C = caustics_of_line(F, ell)
    checks = []
    for i, (alpha, flagged) in enumerate(zip(C.alpha, C.degenerate_flags)):
        if flagged:
            continue
        checks.append(
            check_leq(f"tangency_defect_{i + 1}", abs(tangency_defect(F, alpha, ell)), cfg.tol("tangency", 1e-8))
        )
    checks.append(check_eq("caustic_interlacing", int(caustic_ordering_ok(F, C)), 1))
    coords = elliptic_coordinates(F, x0)
    results = {
        "line": {"p": ell.p, "v": ell.v},
        "caustics": C.alpha,
        "degenerate_flags": C.degenerate_flags,
        "point_coordinates": coords.lam,
    }
    scene = None
    if F.d == 2:
        count, pts, _ = line_quadric_intersect(F, cfg.boundary, ell)
        chord = tuple(tuple(p) for p in pts) if count == 2 else (tuple(ell.at(-2.0 * F.length_scale)), tuple(ell.at(2.0 * F.length_scale)))
        scene = Scene(
            semiaxes=F.a,
            conics=_drawable_conics(F, (cfg.boundary, *C.alpha)),
            paths=(chord,),
        )
    return results, checks, scene, None


def _full_caustics(cfg, F):
    if cfg.caustics is None or len(cfg.caustics) != F.d - 1 or any(v is None for v in cfg.caustics):
        raise ValidationError("this command needs 'caustics' with all d-1 parameters")
    return tuple(float(v) for v in cfg.caustics)


def _cayley_value(rep):
    """Scalar the periodicity verdict is judged by: the normalized
    determinant when the matrix is square, else the relative smallest
    singular value."""
    if rep.normalized_det is not None:
        return abs(float(rep.normalized_det))
    s = rep.singular_values
    if not s or s[0] == 0.0:
        return 0.0
    return float(s[-1] / s[0])


def _cmd_cayley_check(cfg, rng):
    F = ConfocalFamily(cfg.semiaxes)
    C = _full_caustics(cfg, F)
    if cfg.n is None:
        raise ValidationError("cayley-check needs 'n'")
    x0 = float(cfg.options.get("expansion_point", 0.0))
    rep = cayley_periodic(F, C, cfg.n, x0=x0)
    value = _cayley_value(rep)
    checks = [
        check_leq("cayley_det", value, cfg.tol("cayley_det", 1e-6), detail=f"n={cfg.n}"),
        check_eq("rank_deficient", int(rep.satisfied), 1, detail=f"rank {rep.numerical_rank} < {rep.threshold_rank}"),
    ]
    return {"cayley": rep}, checks, None, None


def _cmd_cayley_weak(cfg, rng):
    F = ConfocalFamily(cfg.semiaxes)
    C = _full_caustics(cfg, F)
    if cfg.r is None or cfg.s is None:
        raise ValidationError("cayley-weak needs 'r' and 's'")
    x0 = float(cfg.options.get("expansion_point", 0.0))
    rep = cayley_weak(F, C, cfg.r, cfg.s, x0)
    value = _cayley_value(rep)
    checks = [
        check_leq("weak_det", value, cfg.tol("cayley_det", 1e-6), detail=f"r={cfg.r} s={cfg.s}"),
    ]
    results = {"weak": rep}
    if cfg.s == -1:
        # s = -1 states line equality, which is plain n = r periodicity
        per = cayley_periodic(F, C, cfg.r, x0=x0)
        same = rep.matrix == per.matrix
        checks.append(check_eq("matches_periodic", int(same), 1, detail="matrix contents, bit level"))
        results["periodic"] = per
    return results, checks, None, None


def _cmd_cayley_search(cfg, rng):
    F = ConfocalFamily(cfg.semiaxes)
    if cfg.n is None:
        raise ValidationError("cayley-search needs 'n'")
    if cfg.bracket is not None:
        bracket = cfg.bracket
    else:
        bracket = (1e-4 * F.a[0], F.a[0] * (1.0 - 1e-4))
    fixed = None
    if F.d > 2:
        if cfg.caustics is None:
            raise ValidationError("cayley-search needs 'caustics' with one null slot for d > 2")
        fixed = tuple(cfg.caustics)
    if cfg.start_point is not None:
        x_b = _project_boundary(F, cfg.boundary, cfg.start_point)
    else:
        x_b, _ = _random_state(F, cfg.boundary, rng)
    alpha = caustic_search(
        F,
        cfg.n,
        bracket,
        fixed_caustics=fixed,
        samples=int(cfg.options.get("samples", 32)),
        start_point=x_b,
        branch=int(cfg.options.get("branch", 0)),
        closure_tol=cfg.tol("closure", 1e-7),
    )
    alphas = [alpha] if fixed is None else [alpha if v is None else v for v in fixed]
    dirs = tangent_directions(F, x_b, alphas)
    if not dirs:
        raise SearchFailed(f"no tangent launch at the found caustic {alpha}")
    v = _inward(F, cfg.boundary, x_b, dirs[0])
    traj = simulate(F, x_b, v, cfg.n, lam=cfg.boundary)
    gap = closure_gap(traj, cfg.n)
    rep = cayley_periodic(F, tuple(alphas), cfg.n)
    checks = [
        check_leq("closure_gap", gap, cfg.tol("closure", 1e-7), detail=f"n={cfg.n}"),
        check_leq("cayley_det", _cayley_value(rep), cfg.tol("cayley_det", 1e-6)),
    ]
    results = {
        "alpha_star": float(alpha),
        "caustics": tuple(float(a) for a in alphas),
        "cayley": rep,
        "trajectory": to_record(traj),
    }
    scene = _orbit_scene(F, cfg, traj) if F.d == 2 else None
    return results, checks, scene, None


def _cmd_drc(cfg, rng):
    F = ConfocalFamily(cfg.semiaxes)
    lam1 = float(cfg.options.get("lam1", cfg.boundary))
    lam2 = float(cfg.options.get("lam2", -0.8 * F.a[0]))
    instances = int(cfg.options.get("instances", 5))
    worst_law = 0.0
    worst_pencil = 0.0
    rows = []
    for _ in range(instances):
        x, v = _random_state(F, cfg.boundary, rng)
        ell1 = Line.from_point_direction(x, v)
        quad = build_drc(F, lam1, lam2, ell1)
        ver = drc_verify(F, quad, tol=cfg.tol("law", 1e-8))
        worst_law = max(worst_law, ver.max_law_gap)
        worst_pencil = max(worst_pencil, ver.pencil.ratio)
        rows.append({"law_gap": ver.max_law_gap, "pencil_ratio": ver.pencil.ratio, "ok": ver.ok})
    checks = [
        check_leq("max_law_gap", worst_law, cfg.tol("law", 1e-8), detail=f"{instances} quads"),
        check_leq("max_pencil_ratio", worst_pencil, cfg.tol("pencil", 1e-9)),
    ]
    return {"lam1": lam1, "lam2": lam2, "instances": rows}, checks, None, None


def _random_context(F, rng, attempts=40):
    for _ in range(attempts):
        x, v = _random_state(F, 0.0, rng)
        O = Line.from_point_direction(x, v)
        C = caustics_of_line(F, O)
        if any(C.degenerate_flags):
            continue
        try:
            return new_context(F, C.alpha[0], C.alpha[1], O)
        except BilliardError:
            continue
    raise SearchFailed(f"no usable neutral line after {attempts} draws")


def _co_element(ctx, t, branch):
    z = np.asarray(ctx.O.at(t))
    lams, flags = core.elliptic_coords(ctx.family.arr, z, 1e-12)
    if flags[branch]:
        return None
    return reflect_line(ctx.family, float(lams[branch]), z, ctx.O)


def _draw_elements(ctx, rng, count, spread=0.9):
    """count distinct C_O elements from random points along O."""
    scale = ctx.family.length_scale
    out = []
    for _ in range(200):
        if len(out) == count:
            break
        t = float(rng.uniform(-spread, spread)) * scale
        branch = int(rng.integers(0, ctx.family.d))
        try:
            s = _co_element(ctx, t, branch)
        except BilliardError:
            continue
        if s is None:
            continue
        if line_distance(s, ctx.O) < 1e-6:
            continue
        if any(line_distance(s, seen) < 1e-6 for seen in out):
            continue
        out.append(s)
    if len(out) < count:
        raise SearchFailed(f"only {len(out)} of {count} group elements found")
    return out


def _cmd_algebra(cfg, rng):
    F = ConfocalFamily(cfg.semiaxes if len(cfg.semiaxes) == 3 else _D3_DEFAULT)
    ctx = _random_context(F, rng)
    s1, s2, s3, s4 = _draw_elements(ctx, rng, 4)
    x = add_co(ctx, s1, s2)
    y = add_co(ctx, s3, s4)
    tol = cfg.tol("algebra", ALGEBRA_TOL)
    neutral = line_distance(add(ctx, x, ctx.O), x)
    inverse = line_distance(add(ctx, x, negate(ctx, x)), ctx.O)
    commut = line_distance(add(ctx, x, y), add(ctx, y, x))
    assoc = line_distance(
        partial_add(ctx, s3, add_co(ctx, s1, s2)),
        partial_add(ctx, s1, add_co(ctx, s2, s3)),
    )
    checks = [
        check_leq("neutral_gap", neutral, tol),
        check_leq("inverse_gap", inverse, tol),
        check_leq("commutativity_gap", commut, tol),
        check_leq("associativity_gap", assoc, tol),
    ]
    results = {
        "caustics": ctx.alphas,
        "Q_O": ctx.Q_O,
        "degenerate_context": ctx.degenerate,
        "O": {"p": ctx.O.p, "v": ctx.O.v},
        "gaps": {
            "neutral": neutral,
            "inverse": inverse,
            "commutativity": commut,
            "associativity": assoc,
        },
    }
    return results, checks, None, None


def _cmd_star(cfg, rng):
    F = ConfocalFamily(cfg.semiaxes if len(cfg.semiaxes) == 3 else _D3_DEFAULT)
    tol = cfg.tol("algebra", ALGEBRA_TOL)
    last = None
    for _ in range(10):
        ctx = _random_context(F, rng)
        p, q, s = _draw_elements(ctx, rng, 3)
        try:
            star = star_configuration(ctx, p, q, s, tol=tol)
            break
        except (DegenerateConfiguration, SearchFailed) as exc:
            last = exc
    else:
        raise SearchFailed(f"no admissible star instance found: {last}")
    checks = [
        check_leq("triplet_residual_max", max(star.triplet_residuals), tol),
        check_leq("pencil_ratio_max", max(star.pencil_ratios), tol),
        check_leq("law_gap_max", max(star.law_gaps), tol),
        check_eq("triplets", len(star.triplets), 8),
        check_eq("quadruplets", len(star.quadruplets), 6),
        check_eq("incidences", sum(len(t) for t in star.triplets), 24),
    ]
    results = {
        "caustics": ctx.alphas,
        "quadrics": star.quadrics,
        "triplet_residuals": star.triplet_residuals,
        "pencil_ratios": star.pencil_ratios,
        "law_gaps": star.law_gaps,
    }
    return results, checks, None, None


def _cmd_grid(cfg, rng):
    F = ConfocalFamily(cfg.semiaxes)
    if F.d != 2:
        raise ValidationError("grids are collected for d = 2")
    x0, v0 = _start_state(cfg, F, rng)
    traj = simulate(F, x0, v0, cfg.bounces, lam=cfg.boundary)
    alpha = traj.caustics.alpha[0]
    ks_diff = [int(k) for k in cfg.options.get("difference_k", (1, 2, 3))]
    ks_sum = [int(k) for k in cfg.options.get("sum_k", (3, 4, 5))]
    fit_tol = cfg.tol("grid_fit", 1e-8)
    checks = []
    summary = []
    point_sets = []
    rows = []
    for mode, ks in (("difference", ks_diff), ("sum", ks_sum)):
        tag = "P" if mode == "difference" else "Q"
        for k in ks:
            gs = collect_grid(traj, None, k, mode)
            lam, res = fit_confocal(F, gs.points)
            cls = classify_grid(F, alpha, (mode, k), lam)
            checks.append(check_leq(f"{tag}{k}_fit", res, fit_tol, detail=f"lambda={lam:.9g}"))
            checks.append(
                check_eq(
                    f"{tag}{k}_class",
                    int(cls.consistent),
                    1,
                    detail=f"{cls.conic_type}, predicted {cls.predicted_type}",
                )
            )
            summary.append(
                {
                    "mode": mode,
                    "k": k,
                    "points": len(gs.points),
                    "lambda": lam,
                    "residual": res,
                    "conic_type": cls.conic_type,
                    "predicted_type": cls.predicted_type,
                    "skipped_parallel": gs.skipped_parallel,
                }
            )
            point_sets.append((k, tuple(tuple(p) for p in gs.points)))
            rows.extend((mode, k, p[0], p[1]) for p in gs.points)
    results = {"caustic": alpha, "grids": summary}
    scene = _orbit_scene(F, cfg, traj, point_sets=point_sets)
    return results, checks, scene, (["mode", "k", "x1", "x2"], rows)


def _cmd_render(cfg, rng):
    F = ConfocalFamily(cfg.semiaxes)
    if F.d != 2:
        raise ValidationError("render draws d = 2 scenes")
    conics = [float(v) for v in cfg.options.get("conics", ())]
    paths = []
    point_sets = []
    results = {}
    want_orbit = bool(cfg.options.get("orbit", False))
    ks_diff = [int(k) for k in cfg.options.get("grid_difference_k", ())]
    ks_sum = [int(k) for k in cfg.options.get("grid_sum_k", ())]
    if want_orbit or ks_diff or ks_sum:
        x0, v0 = _start_state(cfg, F, rng)
        traj = simulate(F, x0, v0, cfg.bounces, lam=cfg.boundary)
        conics = list(_drawable_conics(F, (cfg.boundary, *traj.caustics.alpha, *conics)))
        paths.append(tuple(tuple(p) for p in traj.points))
        results["caustics"] = traj.caustics.alpha
        for mode, ks in (("difference", ks_diff), ("sum", ks_sum)):
            for k in ks:
                gs = collect_grid(traj, None, k, mode)
                point_sets.append((k, tuple(tuple(p) for p in gs.points)))
    scene = Scene(
        semiaxes=F.a,
        conics=tuple(conics),
        paths=tuple(paths),
        point_sets=tuple(point_sets),
    )
    return results, [], scene, None


_COMMANDS = {
    "simulate": _cmd_simulate,
    "caustics": _cmd_caustics,
    "cayley-check": _cmd_cayley_check,
    "cayley-weak": _cmd_cayley_weak,
    "cayley-search": _cmd_cayley_search,
    "drc": _cmd_drc,
    "algebra": _cmd_algebra,
    "star": _cmd_star,
    "grid": _cmd_grid,
    "render": _cmd_render,
}


# ------------------------------------------------------------------- plumbing


def run_command(name, cfg):
    """Execute one command pipeline and write its artifacts.

    Returns (report, exit_code); the report JSON goes to the output
    directory as <name>.report.json, the figure and point cloud are
    written when the config asks for them (render always writes its
    figure).
    """
    if name not in _COMMANDS:
        raise ValidationError(f"unknown command {name!r}")
    t0 = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    results, checks, scene, csv = _COMMANDS[name](cfg, rng)
    wall = time.perf_counter() - t0

    out_dir = Path(cfg.out or ".")
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ValidationError(f"cannot create output directory {out_dir}: {exc}") from None

    artifacts = {}
    if scene is not None and (cfg.svg or name == "render"):
        fig_path = out_dir / f"{name}.svg"
        render_svg(scene, fig_path)
        artifacts["svg"] = fig_path.name
    if csv is not None and cfg.csv:
        header, rows = csv
        csv_path = out_dir / f"{name}.points.csv"
        write_points_csv(csv_path, header, rows)
        artifacts["csv"] = csv_path.name
    if artifacts:
        results = dict(results, artifacts=artifacts)

    report = new_report(
        name,
        json.loads(emit_config(cfg)),
        results,
        checks,
        wall,
        core.backend_name(),
    )
    write_report(report, out_dir / f"{name}.report.json")
    return report, (0 if report.passed else 1)


def _parse_tol_flags(entries):
    out = {}
    for entry in entries or ():
        name, sep, value = entry.partition("=")
        if not sep or not name:
            raise ParseError(f"--tol expects name=value, got {entry!r}")
        try:
            out[name] = float(value)
        except ValueError:
            raise ParseError(f"--tol value for {name!r} is not a number") from None
    return out


def _config_from_args(args):
    overrides = {}
    if args.out is not None:
        overrides["out"] = args.out
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.svg:
        overrides["svg"] = True
    if args.csv:
        overrides["csv"] = True
    tols = _parse_tol_flags(args.tol)
    if tols:
        overrides["tolerances"] = tols
    if args.config is not None:
        return parse_config(args.config, overrides)
    base = {"semiaxes": list(_D3_DEFAULT if args.command in ("drc", "algebra", "star") else (1.0, 2.0))}
    base.update(overrides)
    return parse_config(base)


def _exit_code_table():
    lines = ["exit codes:", "    0  all checks passed", "    1  a numerical check failed"]
    for cls in ERROR_CLASSES:
        lines.append(f"  {cls.exit_code:>3}  {cls.__name__}")
    lines.append(f"   {BilliardError.exit_code}  other billiard errors")
    return "\n".join(lines)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="confocal-billiards",
        description="Billiards in confocal families of quadrics: simulation, "
        "periodicity tests, line algebra, grids, figures.",
        epilog=_exit_code_table(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    helps = {
        "simulate": "reflect an orbit and verify caustic conservation",
        "caustics": "caustic parameters and tangency defects of a line",
        "cayley-check": "periodicity condition for given caustics and n",
        "cayley-weak": "s-weak closure condition for given caustics, r, s",
        "cayley-search": "find a caustic closing an n-orbit, then verify",
        "drc": "build and verify double reflection quads",
        "algebra": "group laws of the tangent line algebra (d = 3)",
        "star": "twelve-plane star configuration checks (d = 3)",
        "grid": "segment intersection grids on confocal conics (d = 2)",
        "render": "draw a scene to SVG without checks",
    }
    for name in COMMAND_NAMES:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", help="JSON config path")
        p.add_argument("--out", help="output directory (default: current)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument(
            "--tol",
            action="append",
            metavar="NAME=VALUE",
            help="override one named tolerance (repeatable)",
        )
        p.add_argument("--svg", action="store_true", help="write the figure")
        p.add_argument("--csv", action="store_true", help="write point clouds")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        report, code = run_command(args.command, cfg)
    except BilliardError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    for c in report.checks:
        mark = "PASS" if c.ok else "FAIL"
        extra = f" ({c.detail})" if c.detail else ""
        print(f"check {c.name}: {mark} value={c.value:.6g} threshold={c.threshold:.6g}{extra}")
    out_dir = cfg.out or "."
    print(f"report: {out_dir}/{args.command}.report.json")
    if report.passed:
        print(f"{args.command}: all checks passed")
    else:
        failed = sum(1 for c in report.checks if not c.ok)
        print(f"{args.command}: {failed} check(s) failed")
    return code


if __name__ == "__main__":
    sys.exit(main())
