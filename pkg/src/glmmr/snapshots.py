"""Binary field snapshots with a JSON sidecar.

Layout: a 64-byte little-endian header ``(magic, L, nx, ny, t, gamma)``
padded with zeros, then ``ny * nx * 9`` float64 values, row-major with the
nine conserved components interleaved per cell.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .physics import NVAR

MAGIC = b"GLMMHD01"
HEADER = struct.Struct("<8sqqqdd16x")
assert HEADER.size == 64


@dataclass
class Snapshot:
    q: np.ndarray  # (9, nx, ny)
    level: int
    t: float
    gamma: float


def save_snapshot(path, q, level, t, gamma, sidecar=None):
    path = Path(path)
    q = np.asarray(q, dtype=float)
    _, nx, ny = q.shape
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, int(level), nx, ny, float(t), float(gamma)))
        fh.write(np.ascontiguousarray(q.transpose(2, 1, 0)).astype("<f8").tobytes())
    if sidecar is not None:
        meta = dict(sidecar, t=float(t), level=int(level), nx=nx, ny=ny)
        path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def load_snapshot(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, level, nx, ny, t, gamma = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a snapshot file (magic {magic!r})")
    data = np.frombuffer(raw, dtype="<f8", offset=HEADER.size)
    if data.size != nx * ny * NVAR:
        raise ValueError(f"{path}: expected {nx * ny * NVAR} values, found {data.size}")
    q = data.reshape(ny, nx, NVAR).transpose(2, 1, 0).astype(float)
    return Snapshot(q, level, t, gamma)
