"""Deterministic output writers: CSV, JSON, PGM and SVG heatmaps.

All writes go through :func:`atomic_write` (temporary file in the target
directory, then ``os.replace``).
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile

import numpy as np

__all__ = [
    "SCHEMA",
    "LOG_FLOOR",
    "atomic_write",
    "format_number",
    "csv_bytes",
    "json_bytes",
    "to_jsonable",
    "heatmap",
    "heatmap_svg",
    "sha256",
]

SCHEMA = "skinlat/1"
LOG_FLOOR = 1e-14


def atomic_write(path, data):
    """Write ``data`` (bytes) to ``path`` atomically."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256(data):
    return hashlib.sha256(data).hexdigest()


def format_number(x):
    """17 significant digits for floats, plain text for ints and strings."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def csv_bytes(header, rows):
    """Headered CSV with LF line endings; cells formatted by :func:`format_number`."""
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row of length {len(row)} for {len(header)} columns")
        lines.append(",".join(format_number(c) for c in row))
    return ("\n".join(lines) + "\n").encode("ascii")


def to_jsonable(obj):
    """Convert numpy scalars/arrays and complex numbers to JSON types.

    Complex numbers become ``{"re": .., "im": ..}``; non-finite floats become
    ``null``.
    """
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": to_jsonable(obj.real), "im": to_jsonable(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def json_bytes(payload):
    """Schema-tagged, key-sorted JSON document."""
    doc = {"schema": SCHEMA}
    doc.update(to_jsonable(payload))
    return (json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n").encode("ascii")


def _levels(grid, scale):
    grid = np.asarray(grid, dtype=float)
    if scale == "log":
        grid = np.log10(np.maximum(grid, LOG_FLOOR))
    elif scale != "linear":
        raise ValueError(f"unknown scale {scale!r}")
    lo, hi = float(grid.min()), float(grid.max())
    if hi - lo <= 0:
        return np.full(grid.shape, 0.5)
    return (grid - lo) / (hi - lo)


def _image_rows(grid):
    # grid[w - 1, v - 1] -> image row 1 is v = L, column 1 is w = 1
    return np.asarray(grid).T[::-1, :]


def heatmap(profile, scale="linear"):
    """Grayscale P5 PGM of a density profile.

    Values are mapped linearly (or via ``log10`` with a ``1e-14`` floor) from
    the grid minimum (black) to maximum (white); a flat grid is mid-gray.
    """
    grid = profile.grid if hasattr(profile, "grid") else np.asarray(profile)
    levels = _image_rows(_levels(grid, scale))
    pixels = np.rint(levels * 255).astype(np.uint8)
    rows, cols = pixels.shape
    head = (f"P5\n# skinlat density, scale={scale}; row 1 is v=L, column 1 is w=1\n"
            f"{cols} {rows}\n255\n").encode("ascii")
    return head + pixels.tobytes()


_RAMP = np.array([
    (68, 1, 84), (59, 82, 139), (33, 145, 140), (94, 201, 98), (253, 231, 37),
], dtype=float)


def _ramp(t):
    x = t * (len(_RAMP) - 1)
    i = min(int(x), len(_RAMP) - 2)
    c = _RAMP[i] + (x - i) * (_RAMP[i + 1] - _RAMP[i])
    return "#%02x%02x%02x" % tuple(int(round(v)) for v in c)


def heatmap_svg(profile, scale="linear", cell=8):
    """SVG heatmap with a viridis-like colour ramp, same orientation as :func:`heatmap`."""
    grid = profile.grid if hasattr(profile, "grid") else np.asarray(profile)
    levels = _image_rows(_levels(grid, scale))
    rows, cols = levels.shape
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{cols * cell}" height="{rows * cell}" '
        f'shape-rendering="crispEdges">',
        f"<!-- skinlat density, scale={scale}; top row is v=L -->",
    ]
    for r in range(rows):
        for c in range(cols):
            out.append(f'<rect x="{c * cell}" y="{r * cell}" width="{cell}" height="{cell}" '
                       f'fill="{_ramp(levels[r, c])}"/>')
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode("ascii")
