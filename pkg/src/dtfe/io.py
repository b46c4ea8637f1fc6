"""CSV and JSON readers and writers for patterns, tessellations and fields.

CSV output follows RFC 4180 (``csv`` module defaults, CRLF line ends).
JSON is written with sorted keys so equal inputs give identical bytes.
"""

from __future__ import annotations

import csv
import io
import json

import numpy as np

from .errors import ConfigError
from .geometry import PointPattern


def load_config(path):
    """Parse a JSON config file, reporting the line and column of syntax errors."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return cfg


def dumps_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def rows_to_csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                         for v in row])
    return buf.getvalue()


def pattern_to_csv(pattern):
    header = ["x"] if pattern.dim == 1 else ["x", "y"]
    rows = [list(p) + [int(g)] for p, g in zip(pattern.points.tolist(), pattern.ghost)]
    return rows_to_csv(header + ["ghost"], rows)


def read_pattern_csv(path, window=None):
    """Read ``x[,y][,ghost]`` columns (header required)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ConfigError(f"{path}: empty pattern file") from None
        coords = [c for c in ("x", "y") if c in header]
        if coords not in (["x"], ["x", "y"]):
            raise ConfigError(f"{path}: header must contain 'x' or 'x,y', got {header}")
        cols = [header.index(c) for c in coords]
        gcol = header.index("ghost") if "ghost" in header else None
        pts, ghost = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not f.strip() for f in row):
                continue
            try:
                pts.append([float(row[k]) for k in cols])
                ghost.append(bool(int(row[gcol])) if gcol is not None else False)
            except (ValueError, IndexError):
                raise ConfigError(f"{path}:{lineno}: malformed row {row}") from None
    arr = np.array(pts, dtype=float).reshape(-1, len(cols))
    try:
        return PointPattern(arr, np.array(ghost, dtype=bool), window)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def field_to_csv(est):
    """One row per Delaunay cell: id, vertex indices, volume, field value."""
    if est.tess is None:
        return rows_to_csv(["cell", "vertices", "volume", "value"],
                           [[0, "", est.window.volume, est.constant]])
    rows = [[i, " ".join(map(str, cell)), vol, val]
            for i, (cell, vol, val) in enumerate(zip(est.tess.cells.tolist(),
                                                     est.tess.cell_volume, est.cell_value))]
    return rows_to_csv(["cell", "vertices", "volume", "value"], rows)


def grid_to_csv(points, values):
    points = np.asarray(points, dtype=float)
    header = ["x"] if points.shape[1] == 1 else ["x", "y"]
    return rows_to_csv(header + ["value"],
                       [list(p) + [v] for p, v in zip(points.tolist(), np.ravel(values))])
