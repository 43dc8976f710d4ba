"""CSV readers and writers for particle and vortex files."""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .errors import InputFormatError

PARTICLE_HEADER = ("x", "y", "q")
VORTEX_HEADER = ("x", "y", "gamma")


def fmt(v: float) -> str:
    """Shortest decimal that round-trips the double."""
    return repr(float(v))


def _read_three_columns(path, header: tuple[str, ...]) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None:
            raise InputFormatError(f"{path} is empty", line=1)
        if tuple(c.strip() for c in first) != header:
            raise InputFormatError(f"expected header {','.join(header)}, got {','.join(first)}",
                                   line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if row[0].lstrip().startswith("#"):
                continue
            if len(row) != len(header):
                raise InputFormatError(f"expected {len(header)} fields, got {len(row)}", line=lineno)
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise InputFormatError(str(exc), line=lineno) from None
            if not all(math.isfinite(v) for v in vals):
                raise InputFormatError("non-finite value", line=lineno)
            rows.append(vals)
    if not rows:
        raise InputFormatError(f"{path} holds no data rows")
    return np.asarray(rows, dtype=np.float64)


def read_particles(path) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(positions (N, 2), strengths (N,))`` from an ``x,y,q`` file."""
    data = _read_three_columns(path, PARTICLE_HEADER)
    return data[:, :2], data[:, 2]


def read_vortices(path) -> tuple[np.ndarray, np.ndarray]:
    data = _read_three_columns(path, VORTEX_HEADER)
    return data[:, :2], data[:, 2]


def _write_three_columns(path, header, positions, values) -> None:
    lines = [",".join(header)]
    for (x, y), v in zip(np.asarray(positions), np.asarray(values)):
        lines.append(f"{fmt(x)},{fmt(y)},{fmt(v)}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_particles(path, positions, strengths) -> None:
    _write_three_columns(path, PARTICLE_HEADER, positions, strengths)


def write_vortices(path, positions, gamma) -> None:
    _write_three_columns(path, VORTEX_HEADER, positions, gamma)
