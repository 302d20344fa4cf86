"""Numerical laboratory for billiards in confocal families of quadrics.

Modules: confocal (families, lines, caustics, elliptic coordinates),
reflection (billiard law, double reflection quads), trajectory
(simulation, closure, winding), cayley (periodicity and weak closure
conditions, caustic search), algebra3d (the tangent line group in
space), grid (segment intersection grids on confocal conics), and the
artifact layer config/report/svgfig/cli. The numerical kernels live in
core, which picks the compiled backend and falls back to pure Python
(set CONFOCAL_BILLIARDS_PURE=1 to force the fallback).
"""

__version__ = "0.1.0"

from .confocal import (
    CausticSet,
    ConfocalFamily,
    EllipticCoords,
    Hyperplane,
    Line,
    caustic_ordering_ok,
    caustics_of_line,
    elliptic_coordinates,
    line_distance,
    lines_equal,
    point_from_elliptic,
    tangent_directions,
)
from .core import backend_name
from .errors import BilliardError
from .reflection import (
    DRCQuad,
    build_drc,
    drc_verify,
    pencil_check,
    reflect,
    reflect_line,
    reflection_law_check,
)
from .trajectory import (
    Trajectory,
    caustic_drift,
    classify_winding_2d,
    closure_gap,
    detect_closure,
    from_record,
    simulate,
    simulate_sequence,
    to_record,
)
from .cayley import CayleyReport, caustic_search, cayley_periodic, cayley_weak
from .algebra3d import (
    AlgebraContext,
    add,
    billiard_B,
    divisor_D,
    lines_meeting,
    negate,
    new_context,
    s_skew,
    star_configuration,
    tau,
)
from .grid import (
    GridSet,
    classify_grid,
    collect_grid,
    fit_confocal,
    grid_skew_profile,
    half_branch_check,
)
from .config import RunConfig, emit_config, parse_config
from .report import Report, canonical_json, report_json, write_report
from .svgfig import Scene, render_svg
from .cli import main, run_command
