"""Path files, run configuration files and log/summary serialisation.

Path files and run configs are INI-style text (``configparser``).  Numeric
fields accept expressions such as ``pi/2``; analytic segments give ``x`` and
``y`` as expressions in ``u``.

Path file::

    [path]
    name = demo

    [segment 1]
    kind = line            ; line | arc | analytic
    start = 0, 0
    end = 4, 0

    [segment 2]
    kind = arc
    center = 4, 2
    radius = 2
    start_angle = -pi/2
    sweep = pi/2           ; > 0 counter-clockwise

    [segment 3]
    kind = analytic
    x = 6 + u
    y = 2 + 0.01*u**3
    u = 0, 1

An optional ``s = lo, hi`` per segment fixes its share of [0, 1]; otherwise
shares are proportional to arc length.
"""
from __future__ import annotations

import configparser
import csv
import json
import math
from pathlib import Path
from typing import Union

import numpy as np

from .refpath import (BUILTIN_PATHS, ArcSegment, LineSegment, ParametricSegment, PathError,
                      ReferencePath)
from .sim import LOG_COLUMNS, SimLog

PathLike = Union[str, Path]


def parse_number(text: str) -> float:
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    import sympy

    val = sympy.sympify(text, locals={"pi": sympy.pi, "e": sympy.E})
    if not val.is_number:
        raise ValueError(f"not a number: {text!r}")
    return float(val)


def parse_numbers(text: str, n: int | None = None) -> tuple[float, ...]:
    vals = tuple(parse_number(t) for t in text.split(","))
    if n is not None and len(vals) != n:
        raise ValueError(f"expected {n} comma-separated values, got {text!r}")
    return vals


def _analytic_segment(sec, label: str) -> ParametricSegment:
    import sympy

    u = sympy.Symbol("u")
    ns = {"u": u, "pi": sympy.pi}
    fx = sympy.sympify(sec["x"], locals=ns)
    fy = sympy.sympify(sec["y"], locals=ns)
    exprs = [fx, fy, sympy.diff(fx, u), sympy.diff(fy, u), sympy.diff(fx, u, 2), sympy.diff(fy, u, 2)]
    fns = [sympy.lambdify(u, ex, "numpy") for ex in exprs]
    u_range = parse_numbers(sec.get("u", "0, 1"), 2)
    return ParametricSegment(fns[0], fns[1], tuple(fns[2:]), u_range, label=label)


def loads_path(text: str) -> ReferencePath:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.read_string(text)
    name = cp.get("path", "name", fallback="")
    segs, ranges = [], []
    sections = [s for s in cp.sections() if s.lower().startswith("segment")]
    if not sections:
        raise PathError("path file has no [segment ...] sections")
    for secname in sections:
        sec = cp[secname]
        kind = sec.get("kind", "").strip().lower()
        if kind == "line":
            segs.append(LineSegment(parse_numbers(sec["start"], 2), parse_numbers(sec["end"], 2)))
        elif kind == "arc":
            segs.append(ArcSegment(parse_numbers(sec["center"], 2), parse_number(sec["radius"]),
                                   parse_number(sec["start_angle"]), parse_number(sec["sweep"])))
        elif kind == "analytic":
            segs.append(_analytic_segment(sec, secname))
        else:
            raise PathError(f"[{secname}]: unknown segment kind {kind!r}")
        ranges.append(parse_numbers(sec["s"], 2) if "s" in sec else None)
    if all(r is None for r in ranges):
        return ReferencePath.from_segments(segs, name=name)
    if any(r is None for r in ranges):
        raise PathError("either every segment gives its s range or none does")
    breaks = [ranges[0][0]]
    for lo, hi in ranges:
        if not math.isclose(lo, breaks[-1], abs_tol=1e-12):
            raise PathError("segment s ranges must be contiguous")
        breaks.append(hi)
    return ReferencePath.from_segments(segs, breaks, name=name)


def load_path(spec: PathLike) -> ReferencePath:
    """A built-in path name (e.g. ``benchmark``) or a path file."""
    if str(spec) in BUILTIN_PATHS:
        return BUILTIN_PATHS[str(spec)]()
    p = Path(spec)
    if not p.exists():
        raise FileNotFoundError(f"no built-in path or file named {spec!r}")
    path = loads_path(p.read_text())
    return path if path.name else ReferencePath(path.segments, path.breaks, p.stem)


# ---------------------------------------------------------------------------
# run configuration


def read_config(file: PathLike) -> dict:
    """Flat ``{section: {key: value}}`` dict of strings."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    with open(file) as fh:
        cp.read_file(fh)
    return {s: dict(cp[s]) for s in cp.sections()}


# ---------------------------------------------------------------------------
# logs


def write_csv(log: SimLog, file: PathLike) -> None:
    """One row per step; floats at 17 significant digits, ``in_S`` as 0/1."""
    with open(file, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LOG_COLUMNS)
        for row in log.rows():
            w.writerow([str(int(v)) if name == "in_S" else format(float(v), ".17g")
                        for name, v in zip(LOG_COLUMNS, row)])


def read_csv(file: PathLike) -> dict:
    with open(file, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if tuple(header) != LOG_COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        rows = list(r)
    cols = {}
    for c, name in enumerate(header):
        vals = [row[c] for row in rows]
        cols[name] = np.array([v == "1" for v in vals]) if name == "in_S" else np.array(vals, dtype=float)
    return cols


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_json(data: dict, file: PathLike) -> None:
    with open(file, "w") as fh:
        json.dump(_jsonable(data), fh, indent=2)
        fh.write("\n")
