"""Scalar diagnostics: divergence, energy, helicity rate, L1 error, compression."""
from __future__ import annotations

import csv
from dataclasses import astuple, dataclass, fields

import numpy as np

from .errors import IncompatibleDomains
from .fv import UniformGrid, pad_cells
from .mr import QuadtreeMesh, project
from .physics import BX, BY, BZ, MX, MY, MZ, RHO


@dataclass
class DiagnosticsRecord:
    t: float
    dt: float
    ch: float
    bdiv_max: float
    energy: float
    helicity_rate: float
    leaf_count: int
    virtual_count: int
    dc_running: float

    def __post_init__(self):
        vals = astuple(self)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError(f"non-finite diagnostics: {self}")
        if self.bdiv_max < 0.0:
            raise ValueError("bdiv_max must be non-negative")


CSV_COLUMNS = tuple(f.name for f in fields(DiagnosticsRecord))


def _cells(obj):
    """Cell states ``(9, N)`` and areas ``(N,)`` of a grid or a mesh's leaves."""
    if isinstance(obj, UniformGrid):
        q = obj.q.reshape(obj.q.shape[0], -1)
        return q, np.full(q.shape[1], obj.cell_area)
    if isinstance(obj, QuadtreeMesh):
        return obj.leaf_states()
    q, area = obj
    q = np.asarray(q, dtype=float)
    q = q.reshape(q.shape[0], -1)
    return q, np.broadcast_to(np.asarray(area, dtype=float), q.shape[1:])


def divergence(q, dx, dy, boundary="neumann"):
    """Centred-difference div B at every cell of a ``(9, nx, ny)`` block."""
    p = pad_cells(q[[BX, BY]], boundary)
    return ((p[0, 2:, 1:-1] - p[0, :-2, 1:-1]) / (2.0 * dx)
            + (p[1, 1:-1, 2:] - p[1, 1:-1, :-2]) / (2.0 * dy))


def bdiv_max(obj, dx=None, dy=None, boundary="neumann"):
    """max |div B|; meshes are synthesized by prediction at their finest present level."""
    if isinstance(obj, UniformGrid):
        q, dx, dy, boundary = obj.q, obj.dx, obj.dy, obj.boundary
    elif isinstance(obj, QuadtreeMesh):
        lf = obj.finest_level_present()
        q = obj.synthesize(lf, mode="predict")
        dx, dy, boundary = obj.dx(lf), obj.dy(lf), obj.boundary
    else:
        q = np.asarray(obj, dtype=float)
    return float(np.max(np.abs(divergence(q, dx, dy, boundary))))


def energy_integral(obj):
    """Integral of |u|^2 + |B|^2 over the cells."""
    q, area = _cells(obj)
    rho = q[RHO]
    u2 = (q[MX] ** 2 + q[MY] ** 2 + q[MZ] ** 2) / (rho * rho)
    b2 = q[BX] ** 2 + q[BY] ** 2 + q[BZ] ** 2
    return float(np.sum((u2 + b2) * area))


def energy_mean(obj):
    """Energy integral divided by the covered area (the domain average)."""
    q, area = _cells(obj)
    return energy_integral((q, area)) / float(np.sum(area))


def helicity_rate(obj, a=1.0):
    """a times the integral of B . (u x B); zero up to rounding."""
    q, area = _cells(obj)
    rho = q[RHO]
    ux, uy, uz = q[MX] / rho, q[MY] / rho, q[MZ] / rho
    bx, by, bz = q[BX], q[BY], q[BZ]
    triple = bx * (uy * bz - uz * by) + by * (uz * bx - ux * bz) + bz * (ux * by - uy * bx)
    return float(a * np.sum(triple * area))


def _uniform_density(run):
    if isinstance(run, QuadtreeMesh):
        L = run.max_level
        return run.synthesize(L)[RHO], run.dx(L) * run.dy(L), (run.xlim, run.ylim)
    return run.q[RHO], run.cell_area, (tuple(run.xlim), tuple(run.ylim))


def restrict_to(rho, n):
    """Average a square ``(m, m)`` field down to ``(n, n)`` (``m / n`` a power of two)."""
    while rho.shape[-1] > n:
        rho = project(rho)
    return rho


def l1_density_error(run, reference):
    """Sum of |rho_run - rho_ref| * area on the run's finest uniform grid."""
    rho_run, area, dom_run = _uniform_density(run)
    rho_ref, _, dom_ref = _uniform_density(reference)
    n, m = rho_run.shape[-1], rho_ref.shape[-1]
    if dom_run != dom_ref:
        raise IncompatibleDomains(f"domains differ: {dom_run} vs {dom_ref}")
    if m < n or m % n or (m // n) & (m // n - 1):
        raise IncompatibleDomains(f"reference with {m} cells cannot be restricted to {n}")
    return float(np.sum(np.abs(rho_run - restrict_to(rho_ref, n)) * area))


class DiagnosticsWriter:
    """Per-step CSV log with a fixed header."""

    def __init__(self, path):
        self._fh = open(path, "w", newline="")
        self._w = csv.writer(self._fh)
        self._w.writerow(CSV_COLUMNS)

    def write(self, rec):
        self._w.writerow([v if isinstance(v, (int, np.integer)) else f"{v:.17g}"
                          for v in astuple(rec)])

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_diagnostics(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {c: np.array([float(r[c]) for r in rows]) for c in CSV_COLUMNS}
