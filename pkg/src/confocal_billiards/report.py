"""Structured run reports.

A report is the full record of one command: the echoed config, the
numerical results, and a list of checks where every verdict carries
the measured value next to the threshold it was judged against. All
volatile data (wall time, timestamp, backend) is confined to the meta
block so that the rest of the document is byte-identical across runs
with the same config and seed; canonical_json drops meta and is what
golden tests compare.
"""

import dataclasses
import datetime
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import IoError


@dataclass(frozen=True)
class Check:
    """One pass/fail verdict: value measured, threshold applied."""

    name: str
    ok: bool
    value: float
    threshold: float
    detail: str = ""


def check_leq(name, value, threshold, detail=""):
    value = float(value)
    return Check(name, bool(value <= threshold), value, float(threshold), detail)


def check_eq(name, value, expected, detail=""):
    return Check(name, bool(value == expected), float(value), float(expected), detail or "equality")


@dataclass(frozen=True)
class Report:
    command: str
    config: dict
    results: dict
    checks: tuple
    meta: dict

    @property
    def passed(self):
        return all(c.ok for c in self.checks)


def new_report(command, cfg_payload, results, checks, wall_time_s, backend):
    meta = {
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "wall_time_s": float(wall_time_s),
        "backend": backend,
    }
    return Report(
        command=command,
        config=dict(cfg_payload),
        results=dict(results),
        checks=tuple(checks),
        meta=meta,
    )


def jsonable(obj):
    """Recursive conversion to plain JSON types.

    numpy scalars and arrays become numbers and lists, dataclasses
    become field dicts, non-finite floats become their repr strings
    (JSON has no inf/nan).
    """
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else repr(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return jsonable(float(obj))
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    return repr(obj)


def report_payload(report, include_meta=True):
    payload = {
        "command": report.command,
        "config": jsonable(report.config),
        "results": jsonable(report.results),
        "checks": [jsonable(c) for c in report.checks],
        "passed": report.passed,
    }
    if include_meta:
        payload["meta"] = jsonable(report.meta)
    return payload


def report_json(report):
    return json.dumps(report_payload(report), indent=2, sort_keys=True) + "\n"


def canonical_json(report):
    """Deterministic form: the full report minus the meta block."""
    return json.dumps(report_payload(report, include_meta=False), indent=2, sort_keys=True) + "\n"


def write_report(report, path):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(report_json(report))
    except OSError as exc:
        raise IoError(f"cannot write report {path}: {exc}") from None
    return path


def write_points_csv(path, header, rows):
    """Point cloud export; cells are shortest-repr floats or verbatim strings."""
    def cell(v):
        if isinstance(v, str):
            return v
        if isinstance(v, (bool, int, np.integer)):
            return str(int(v))
        return repr(float(v))

    lines = [",".join(header)]
    lines.extend(",".join(cell(v) for v in row) for row in rows)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write csv {path}: {exc}") from None
    return path
