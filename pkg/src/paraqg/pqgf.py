"""PQGF field snapshot format.

Layout: magic "PQGF", u32 version = 1, u32 n, f64 time, then n*n
little-endian f64 physical lattice values in row-major order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .grid import Grid, SpectralField, to_physical, to_spectral

MAGIC = b"PQGF"
VERSION = 1


def write_snapshot(path, field: SpectralField, time: float) -> None:
    values = to_physical(field)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, field.grid.n))
        fh.write(struct.pack("<d", float(time)))
        fh.write(values.astype("<f8").tobytes(order="C"))


def read_snapshot(path) -> tuple[float, np.ndarray]:
    """Returns (time, n x n physical values)."""
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: not a PQGF snapshot")
    version, n = struct.unpack_from("<II", raw, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported PQGF version {version}")
    (time,) = struct.unpack_from("<d", raw, 12)
    values = np.frombuffer(raw, dtype="<f8", count=n * n, offset=20)
    if values.size != n * n:
        raise ValueError(f"{path}: truncated snapshot")
    return time, values.reshape(n, n).copy()


def read_snapshot_field(path, grid: Grid | None = None) -> tuple[float, SpectralField]:
    time, values = read_snapshot(path)
    if grid is None:
        grid = Grid(values.shape[0])
    return time, to_spectral(values, grid)
