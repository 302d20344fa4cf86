"""Run configuration for the command line tools.

Configs are flat JSON objects. Every key has a default except the
semiaxes, so a minimal config is {"semiaxes": [1.0, 2.0]}. Unknown
keys are rejected rather than ignored, which catches misspelled
tolerance names and options early. emit_config/parse_config round-trip
exactly (floats go through JSON's shortest-repr form).
"""

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import IoError, ParseError, ValidationError


@dataclass(frozen=True)
class RunConfig:
    """Validated inputs of one CLI run.

    semiaxes fix the confocal family; boundary is the reflection
    quadric for simulations. caustics holds full caustic parameters
    (entries may be None where a search should fill the slot) and
    bracket the search interval. options is the command-specific
    grab bag, validated by the command that reads it. tolerances
    override named thresholds; unknown names are rejected at use.
    """

    semiaxes: tuple
    boundary: float = 0.0
    caustics: tuple | None = None
    bracket: tuple | None = None
    start_point: tuple | None = None
    start_direction: tuple | None = None
    bounces: int = 12
    n: int | None = None
    r: int | None = None
    s: int | None = None
    options: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    out: str | None = None
    svg: bool = False
    csv: bool = False
    seed: int = 0

    @property
    def d(self):
        return len(self.semiaxes)

    def tol(self, name, default):
        return float(self.tolerances.get(name, default))


_KEYS = tuple(f.name for f in fields(RunConfig))


def _float_tuple(value, key):
    try:
        out = tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise ParseError(f"key {key!r} must be an array of numbers") from None
    return out


def _opt_float_tuple(value, key):
    if value is None:
        return None
    return _float_tuple(value, key)


def _int(value, key, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"key {key!r} must be an integer")
    if minimum is not None and value < minimum:
        raise ValidationError(f"key {key!r} must be >= {minimum}")
    return value


def _opt_int(value, key, minimum=None):
    if value is None:
        return None
    return _int(value, key, minimum)


def _bool(value, key):
    if not isinstance(value, bool):
        raise ParseError(f"key {key!r} must be a boolean")
    return value


def _validate(raw):
    unknown = sorted(set(raw) - set(_KEYS))
    if unknown:
        raise ParseError("unknown config key(s): " + ", ".join(unknown))
    if "semiaxes" not in raw:
        raise ValidationError("config needs 'semiaxes'")
    semiaxes = _float_tuple(raw["semiaxes"], "semiaxes")
    if len(semiaxes) < 2:
        raise ValidationError("semiaxes needs at least two entries")
    if any(b <= a for a, b in zip(semiaxes, semiaxes[1:])):
        raise ValidationError("semiaxes must be strictly ascending")
    if semiaxes[0] <= 0.0:
        raise ValidationError("semiaxes must be positive")

    caustics = raw.get("caustics")
    if caustics is not None:
        try:
            caustics = tuple(None if v is None else float(v) for v in caustics)
        except (TypeError, ValueError):
            raise ParseError("key 'caustics' must be an array of numbers or nulls") from None

    bracket = _opt_float_tuple(raw.get("bracket"), "bracket")
    if bracket is not None:
        if len(bracket) != 2 or not bracket[0] < bracket[1]:
            raise ValidationError("bracket must be [lo, hi] with lo < hi")

    tolerances = raw.get("tolerances", {})
    if not isinstance(tolerances, dict):
        raise ParseError("key 'tolerances' must be an object")
    try:
        tolerances = {str(k): float(v) for k, v in tolerances.items()}
    except (TypeError, ValueError):
        raise ParseError("tolerance values must be numbers") from None
    if any(v <= 0.0 for v in tolerances.values()):
        raise ValidationError("tolerances must be positive")

    options = raw.get("options", {})
    if not isinstance(options, dict):
        raise ParseError("key 'options' must be an object")

    out = raw.get("out")
    if out is not None and not isinstance(out, str):
        raise ParseError("key 'out' must be a string path")

    boundary = raw.get("boundary", 0.0)
    try:
        boundary = float(boundary)
    except (TypeError, ValueError):
        raise ParseError("key 'boundary' must be a number") from None

    return RunConfig(
        semiaxes=semiaxes,
        boundary=boundary,
        caustics=caustics,
        bracket=bracket,
        start_point=_opt_float_tuple(raw.get("start_point"), "start_point"),
        start_direction=_opt_float_tuple(raw.get("start_direction"), "start_direction"),
        bounces=_int(raw.get("bounces", 12), "bounces", minimum=1),
        n=_opt_int(raw.get("n"), "n", minimum=2),
        r=_opt_int(raw.get("r"), "r", minimum=1),
        s=_opt_int(raw.get("s"), "s", minimum=-1),
        options=dict(options),
        tolerances=tolerances,
        out=out,
        svg=_bool(raw.get("svg", False), "svg"),
        csv=_bool(raw.get("csv", False), "csv"),
        seed=_int(raw.get("seed", 0), "seed", minimum=0),
    )


def parse_config(source, overrides=None):
    """Load and validate a RunConfig from a JSON file.

    source may also be an already-decoded mapping (the CLI passes the
    flag values this way when no config file is given). overrides is a
    partial mapping merged on top, with 'tolerances' merged key-wise so
    a --tol flag does not wipe the file's other thresholds.
    """
    if isinstance(source, dict):
        raw = dict(source)
    else:
        path = Path(source)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot read config {path}: {exc}") from None
        except UnicodeDecodeError:
            raise ParseError(f"config {path} is not valid UTF-8") from None
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(
                f"config {path} is not valid JSON: line {exc.lineno} column {exc.colno}: {exc.msg}"
            ) from None
        if not isinstance(raw, dict):
            raise ParseError(f"config {path} must hold a JSON object")
    if overrides:
        merged_tol = dict(raw.get("tolerances", {}))
        merged_tol.update(overrides.get("tolerances", {}))
        raw.update({k: v for k, v in overrides.items() if k != "tolerances"})
        if merged_tol:
            raw["tolerances"] = merged_tol
    return _validate(raw)


def emit_config(cfg):
    """The config as canonical JSON text; parse_config inverts it."""
    payload = {}
    for f in fields(RunConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = list(value)
        payload[f.name] = value
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
