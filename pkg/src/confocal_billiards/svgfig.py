"""Deterministic SVG figures of plane scenes.

A scene holds confocal conic parameters, trajectory polylines and
labeled point sets. Rendering is pure string assembly: coordinates are
formatted with %.10g, the viewBox is computed from the finite scene
geometry plus a five percent margin, elements are emitted in a fixed
order (axes, conics, paths, points), and nothing volatile enters the
output, so identical scenes give byte-identical files. SVG 1.1, no
scripting.
"""

import numpy as np
from dataclasses import dataclass

from .errors import DegenerateCaustic, IoError, ValidationError

CONIC_SAMPLES = 256
PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
    "#bcbd22",
    "#17becf",
)


@dataclass(frozen=True)
class Scene:
    """Drawable content: a confocal family, conics of it, lines, points.

    conics lists lambda parameters (drawn with the family semiaxes),
    paths lists point sequences, point_sets lists (label, points)
    pairs colored by label. All geometry is d = 2.
    """

    semiaxes: tuple | None = None
    conics: tuple = ()
    paths: tuple = ()
    point_sets: tuple = ()
    show_axes: bool = True


def _fmt(x):
    return f"{float(x):.10g}"


def _ellipse_points(a1, a2, lam):
    th = np.linspace(0.0, 2.0 * np.pi, CONIC_SAMPLES, endpoint=False)
    xs = np.sqrt(a1 - lam) * np.cos(th)
    ys = np.sqrt(a2 - lam) * np.sin(th)
    pts = list(zip(xs, ys))
    pts.append(pts[0])  # close the outline exactly
    return [pts]


def _hyperbola_points(a1, a2, lam, x_lo, x_hi):
    # branches open along +-x2; each is a graph over x1
    xs = np.linspace(x_lo, x_hi, CONIC_SAMPLES // 2)
    ys = np.sqrt((a2 - lam) * (1.0 + xs * xs / (lam - a1)))
    return [list(zip(xs, ys)), list(zip(xs, -ys))]


def _finite_bounds(scene):
    pts = []
    if scene.semiaxes is not None:
        a1, a2 = scene.semiaxes
        for lam in scene.conics:
            if lam < a1:
                pts.append((np.sqrt(a1 - lam), np.sqrt(a2 - lam)))
                pts.append((-np.sqrt(a1 - lam), -np.sqrt(a2 - lam)))
    for path in scene.paths:
        pts.extend((float(p[0]), float(p[1])) for p in path)
    for _, cloud in scene.point_sets:
        pts.extend((float(p[0]), float(p[1])) for p in cloud)
    return pts


def _scene_box(scene):
    pts = _finite_bounds(scene)
    if not pts:
        if scene.semiaxes is not None and scene.conics:
            s = 1.5 * float(np.sqrt(scene.semiaxes[1]))
        else:
            s = 1.0
        return -s, s, -s, s
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    return min(xs), max(xs), min(ys), max(ys)


def _polyline(points, stroke, width):
    coords = " ".join(f"{_fmt(x)},{_fmt(-y)}" for x, y in points)
    return f'<polyline fill="none" stroke="{stroke}" stroke-width="{width}" points="{coords}"/>'


def render_svg(scene, path=None):
    """The scene as SVG text; also written to path when one is given."""
    if scene.semiaxes is not None and len(scene.semiaxes) != 2:
        raise ValidationError("figures are drawn for d = 2 families only")
    for p in scene.paths:
        if any(len(q) != 2 for q in p):
            raise ValidationError("scene paths must hold plane points")

    x_lo, x_hi, y_lo, y_hi = _scene_box(scene)
    span = max(x_hi - x_lo, y_hi - y_lo, 1e-9)
    pad = 0.05 * span
    x_lo, x_hi = x_lo - pad, x_hi + pad
    y_lo, y_hi = y_lo - pad, y_hi + pad

    curves = []
    if scene.semiaxes is not None:
        a1, a2 = scene.semiaxes
        for lam in scene.conics:
            lam = float(lam)
            if lam < a1:
                curves.append(_ellipse_points(a1, a2, lam))
            elif a1 < lam < a2:
                curves.append(_hyperbola_points(a1, a2, lam, x_lo, x_hi))
            else:
                raise DegenerateCaustic(f"conic parameter {lam} has no real points to draw")
        # hyperbola branches can out-grow the box computed from finite
        # geometry; grow the vertical span once so they stay visible
        for branches in curves:
            for branch in branches:
                for _, y in branch:
                    y_lo = min(y_lo, float(y))
                    y_hi = max(y_hi, float(y))
    elif scene.conics:
        raise ValidationError("conic parameters need family semiaxes")

    w = x_hi - x_lo
    h = y_hi - y_lo
    sw = _fmt(0.004 * max(w, h))
    view = f"{_fmt(x_lo)} {_fmt(-y_hi)} {_fmt(w)} {_fmt(h)}"
    width_px = 640
    height_px = _fmt(640.0 * h / w)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width_px}" height="{height_px}" viewBox="{view}">',
    ]
    if scene.show_axes:
        axis = f'stroke="#999999" stroke-width="{sw}"'
        parts.append(f'<line x1="{_fmt(x_lo)}" y1="0" x2="{_fmt(x_hi)}" y2="0" {axis}/>')
        parts.append(f'<line x1="0" y1="{_fmt(-y_hi)}" x2="0" y2="{_fmt(-y_lo)}" {axis}/>')
    for i, branches in enumerate(curves):
        color = PALETTE[i % len(PALETTE)]
        for branch in branches:
            parts.append(_polyline(branch, color, sw))
    for path_pts in scene.paths:
        parts.append(_polyline(path_pts, "#333333", sw))
    r = _fmt(0.008 * max(w, h))
    for label, cloud in scene.point_sets:
        color = PALETTE[int(label) % len(PALETTE)]
        for p in cloud:
            parts.append(
                f'<circle cx="{_fmt(p[0])}" cy="{_fmt(-p[1])}" r="{r}" fill="{color}"/>'
            )
    parts.append("</svg>")
    text = "\n".join(parts) + "\n"

    if path is not None:
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            raise IoError(f"cannot write figure {path}: {exc}") from None
    return text
