"""Plain-text file formats: swarm configurations, trajectories, gridded
densities, error series, benchmark outputs and run manifests."""
from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path

import numpy as np

from .density import Domain, GridSpec, Kernel, ScalarField
from .errors import InputError
from .metric import SwarmConfig, Trajectory

__all__ = [
    "read_swarm", "write_swarm",
    "read_trajectory", "write_trajectory",
    "read_gridded", "write_gridded",
    "read_values", "write_values",
    "read_series", "write_series",
    "write_rows", "read_rows",
    "read_extrema_bounds",
    "write_manifest", "read_manifest",
]


def _lines(path):
    """Non-blank, non-comment lines as ``(lineno, fields)``."""
    try:
        with open(path, newline="") as fh:
            raw = fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read file ({exc.strerror})", path) from exc
    out = []
    for no, line in enumerate(raw, start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        out.append((no, [f.strip() for f in s.split(",")]))
    return out


def _floats(fields, path, no, count=None):
    if count is not None and len(fields) != count:
        raise InputError(f"expected {count} fields, found {len(fields)}", path, no)
    try:
        vals = [float(f) for f in fields]
    except ValueError:
        raise InputError(f"non-numeric field in {','.join(fields)!r}", path, no) from None
    if not all(math.isfinite(v) for v in vals):
        raise InputError("non-finite value", path, no)
    return vals


def _is_label_row(fields, labels) -> bool:
    return [f.lower() for f in fields] == list(labels)


def _header(rows, path, labels):
    """Skip an optional literal label row and return the value header."""
    if not rows:
        raise InputError("file is empty", path, 1)
    if _is_label_row(rows[0][1], labels):
        rows = rows[1:]
        if not rows:
            raise InputError("header values missing", path)
    return rows[0], rows[1:]


def _swarm_header(rows, path):
    (no, fields), rest = _header(rows, path, ("n", "delta", "kernel"))
    if len(fields) != 3:
        raise InputError("header must be N,delta,kernel", path, no)
    try:
        n = int(fields[0])
        delta = float(fields[1])
        kernel = Kernel(fields[2].lower())
    except (ValueError, TypeError) as exc:
        raise InputError(f"bad header ({exc})", path, no) from None
    if n < 1:
        raise InputError("N must be at least 1", path, no)
    if not delta > 0:
        raise InputError("delta must be positive", path, no)
    return n, delta, kernel, rest


def read_swarm(path) -> SwarmConfig:
    rows = _lines(path)
    n, delta, kernel, rest = _swarm_header(rows, path)
    if rest and _is_label_row(rest[0][1], ("x", "y")):
        rest = rest[1:]
    if len(rest) != n:
        line = rest[-1][0] if rest else (rows[-1][0] if rows else 1)
        raise InputError(f"header declares {n} robots, file lists {len(rest)}", path, line)
    pts = [_floats(f, path, no, 2) for no, f in rest]
    return SwarmConfig(np.array(pts), delta, kernel)


def write_swarm(path, cfg: SwarmConfig) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"{cfg.n},{float(cfg.delta)!r},{cfg.kernel.kind}\n")
        for x, y in cfg.positions:
            fh.write(f"{float(x)!r},{float(y)!r}\n")


def read_trajectory(path) -> Trajectory:
    rows = _lines(path)
    n, delta, kernel, rest = _swarm_header(rows, path)
    if not rest:
        raise InputError("trajectory has no snapshots", path)
    if rest[0][1] and rest[0][1][0].lower() == "t":
        rest = rest[1:]
    times, frames = [], []
    for no, f in rest:
        v = _floats(f, path, no, 1 + 2 * n)
        if times and v[0] <= times[-1]:
            raise InputError("times must be strictly increasing", path, no)
        times.append(v[0])
        frames.append(np.array(v[1:]).reshape(n, 2))
    if not frames:
        raise InputError("trajectory has no snapshots", path)
    return Trajectory(np.array(times), np.array(frames), delta, kernel)


def write_trajectory(path, traj: Trajectory) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"{traj.n},{float(traj.delta)!r},{traj.kernel.kind}\n")
        for t, frame in zip(traj.times, traj.positions):
            fh.write(",".join([repr(float(t))] + [repr(float(v)) for v in frame.ravel()]) + "\n")


def read_gridded(path) -> ScalarField:
    """Corner-node field: header ``m1,m2,w,h`` then values with x varying fastest."""
    rows = _lines(path)
    (no, fields), rest = _header(rows, path, ("m1", "m2", "w", "h"))
    if len(fields) != 4:
        raise InputError("header must be m1,m2,w,h", path, no)
    try:
        m1, m2 = int(fields[0]), int(fields[1])
        w, h = float(fields[2]), float(fields[3])
        grid = GridSpec(Domain(w, h), m1, m2, centered=False)
    except (ValueError, TypeError) as exc:
        raise InputError(f"bad header ({exc})", path, no) from None
    if rest and _is_label_row(rest[0][1], ("value",)):
        rest = rest[1:]
    if len(rest) != m1 * m2:
        raise InputError(f"expected {m1 * m2} values, found {len(rest)}", path, rest[-1][0] if rest else no)
    vals = np.array([_floats(f, path, ln, 1)[0] for ln, f in rest])
    return ScalarField(grid, vals.reshape(m2, m1).T)


def write_gridded(path, field: ScalarField) -> None:
    g = field.grid
    with open(path, "w", newline="") as fh:
        fh.write(f"{g.m1},{g.m2},{float(g.domain.width)!r},{float(g.domain.height)!r}\n")
        for v in field.row_major():
            fh.write(f"{float(v)!r}\n")


def read_values(path) -> np.ndarray:
    """One number per line; a single non-numeric first line is taken as a label."""
    rows = _lines(path)
    if rows and len(rows[0][1]) == 1:
        try:
            float(rows[0][1][0])
        except ValueError:
            rows = rows[1:]
    if not rows:
        raise InputError("no values", path)
    return np.array([_floats(f, path, no, 1)[0] for no, f in rows])


def write_values(path, values, label: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if label:
            fh.write(label + "\n")
        for v in np.asarray(values, dtype=float).ravel():
            fh.write(f"{float(v)!r}\n")


def read_series(path) -> tuple[np.ndarray, np.ndarray]:
    """Error time series with rows ``t,e`` (optional ``t,e`` label row)."""
    rows = _lines(path)
    if rows and _is_label_row(rows[0][1], ("t", "e")):
        rows = rows[1:]
    if not rows:
        raise InputError("no samples", path)
    data = np.array([_floats(f, path, no, 2) for no, f in rows])
    return data[:, 0], data[:, 1]


def write_series(path, times, values) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("t,e\n")
        for t, e in zip(times, values):
            fh.write(f"{float(t)!r},{float(e)!r}\n")


def write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for r in rows:
            wr.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def read_rows(path) -> list[dict]:
    try:
        with open(path, newline="") as fh:
            return list(csv.DictReader(line for line in fh if not line.startswith("#")))
    except OSError as exc:
        raise InputError(f"cannot read file ({exc.strerror})", path) from exc


def read_extrema_bounds(prefix) -> tuple[float, float]:
    """``(e_minus, e_plus)`` from a ``PREFIX_result.csv`` of per-start records."""
    path = f"{prefix}_result.csv"
    rows = read_rows(path)
    lows, highs = [], []
    for k, r in enumerate(rows, start=2):
        try:
            v = float(r["value"])
            mode = r["mode"].strip()
        except (KeyError, TypeError, ValueError):
            raise InputError("rows need mode and value columns", path, k) from None
        (lows if mode == "min" else highs if mode == "max" else []).append(v)
    if not lows or not highs:
        raise InputError("result file needs both min and max records", path)
    return min(lows), max(highs)


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, Path):
        return str(v)
    return v


def write_manifest(path, params: dict) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump({k: _jsonable(v) for k, v in params.items()}, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    os.replace(tmp, path)


def read_manifest(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read manifest ({exc})", path) from exc
