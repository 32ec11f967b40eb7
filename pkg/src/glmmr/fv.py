"""Uniform-grid finite-volume engine.

First-order Godunov fluxes, dimensional splitting (x sweep, then y sweep,
then psi damping) and a Heun average of two split steps. The array-level
kernels here are also used level-by-level by :mod:`glmmr.mr`, which is what
makes the keep-all multiresolution run reproduce this solver bit-for-bit.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyGrid, SolverFailure, ZeroTimeStep
from .physics import (
    BX, BY, NVAR, PSI, SWAP_XY, UX, UY, GlmParams, compute_ch, fast_speed,
    to_primitive,
)
from .riemann import hlld_flux

BOUNDARIES = ("neumann", "periodic")
_PAD_MODE = {"neumann": "edge", "periodic": "wrap"}


@dataclass
class UniformGrid:
    """Cell averages ``q`` of shape ``(9, nx, ny)``; axis 1 is x, axis 2 is y."""

    q: np.ndarray
    xlim: tuple = (-1.0, 1.0)
    ylim: tuple = (-1.0, 1.0)
    boundary: str = "neumann"

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        if self.q.ndim != 3 or self.q.shape[0] != NVAR:
            raise ValueError(f"expected (9, nx, ny) cell array, got {self.q.shape}")
        if self.q.shape[1] == 0 or self.q.shape[2] == 0:
            raise EmptyGrid("grid has no cells")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"unknown boundary {self.boundary!r}")

    @property
    def nx(self):
        return self.q.shape[1]

    @property
    def ny(self):
        return self.q.shape[2]

    @property
    def dx(self):
        return (self.xlim[1] - self.xlim[0]) / self.nx

    @property
    def dy(self):
        return (self.ylim[1] - self.ylim[0]) / self.ny

    @property
    def cell_area(self):
        return self.dx * self.dy

    @property
    def domain_area(self):
        return (self.xlim[1] - self.xlim[0]) * (self.ylim[1] - self.ylim[0])

    def centers(self):
        x = self.xlim[0] + (np.arange(self.nx) + 0.5) * self.dx
        y = self.ylim[0] + (np.arange(self.ny) + 0.5) * self.dy
        return np.meshgrid(x, y, indexing="ij")

    def copy(self):
        return UniformGrid(self.q.copy(), self.xlim, self.ylim, self.boundary)


def pad_cells(q, boundary, depth=1):
    """Add ``depth`` ghost layers on both spatial axes."""
    if boundary not in _PAD_MODE:
        raise ValueError(f"unknown boundary {boundary!r}")
    return np.pad(q, ((0, 0), (depth, depth), (depth, depth)), mode=_PAD_MODE[boundary])


def apply_neumann(q, depth=2):
    """Zero-gradient ghost cells: each ghost copies the nearest interior cell."""
    return pad_cells(q, "neumann", depth)


def swap_axes(q):
    """Exchange the roles of x and y (an involution)."""
    return q[SWAP_XY].transpose(0, 2, 1)


def x_face_states(q, boundary):
    """Left and right states at the ``nx + 1`` x-faces of a ``(9, nx, ny)`` block."""
    qp = np.pad(q, ((0, 0), (1, 1), (0, 0)), mode=_PAD_MODE[boundary])
    return qp[:, :-1], qp[:, 1:]


def flux_divergence_update(q, F, dtdx):
    """Conservative update from face fluxes ``F`` of shape ``(9, n + 1, ...)``."""
    return q - dtdx * (F[:, 1:] - F[:, :-1])


def _x_fluxes(q, gamma, ch, boundary):
    qL, qR = x_face_states(q, boundary)
    try:
        return hlld_flux(qL, qR, gamma, ch)
    except SolverFailure as exc:
        raise SolverFailure(f"x-sweep: {exc}", where=exc.where) from exc


def sweep_x(q, gamma, ch, dt, dx, boundary="neumann"):
    """One forward-Euler x sweep over all cells."""
    return flux_divergence_update(q, _x_fluxes(q, gamma, ch, boundary), dt / dx)


def sweep_y(q, gamma, ch, dt, dy, boundary="neumann"):
    """One forward-Euler y sweep, via the x kernel on axis-swapped data."""
    return swap_axes(sweep_x(swap_axes(q), gamma, ch, dt, dy, boundary))


def damping_factor(dt, ch, cp2_over_ch):
    return np.exp(-dt * ch / cp2_over_ch)


def damp_psi(q, dt, ch, cp2_over_ch):
    """Parabolic decay of psi over ``dt``; exact for the damping ODE."""
    out = q.copy()
    out[PSI] = q[PSI] * damping_factor(dt, ch, cp2_over_ch)
    return out


def split_step(q, dt, ch, dx, dy, params, boundary="neumann", *, damp=True, advect=True):
    if advect:
        q = sweep_x(q, params.gamma, ch, dt, dx, boundary)
        q = sweep_y(q, params.gamma, ch, dt, dy, boundary)
    if damp:
        q = damp_psi(q, dt, ch, params.cp2_over_ch)
    return q


def heun_average(q0, q2):
    return 0.5 * (q0 + q2)


def rk2_step(q, dt, ch, dx, dy, params, boundary="neumann", *,
             psi_damp_per_stage=True, advect=True, damp=True):
    """Heun step: average of the start state and two chained split steps.

    With ``psi_damp_per_stage=False`` the sweeps run undamped and psi is
    damped once after the average.
    """
    stage_damp = damp and psi_damp_per_stage
    s1 = split_step(q, dt, ch, dx, dy, params, boundary, damp=stage_damp, advect=advect)
    s2 = split_step(s1, dt, ch, dx, dy, params, boundary, damp=stage_damp, advect=advect)
    out = heun_average(q, s2)
    if damp and not psi_damp_per_stage:
        out = damp_psi(out, dt, ch, params.cp2_over_ch)
    return out


def signal_dt(q, dx, dy, gamma, c_cfl):
    """CFL step from the fast speeds of the given cells (any trailing shape)."""
    if q.size == 0:
        raise EmptyGrid("no cells to bound the time step")
    w = to_primitive(q, gamma)
    sx = np.abs(w[UX]) + fast_speed(w, w[BX], gamma)
    sy = np.abs(w[UY]) + fast_speed(w, w[BY], gamma)
    dt = c_cfl * min(np.min(dx / sx), np.min(dy / sy))
    if not dt > 0.0 or not np.isfinite(dt):
        raise ZeroTimeStep(f"CFL time step is {dt}")
    return float(dt)


def compute_dt(grid, gamma, c_cfl):
    return signal_dt(grid.q, grid.dx, grid.dy, gamma, c_cfl)


@dataclass
class TimeController:
    """Tracks simulated time and clips steps to ``t_end`` and output times."""

    t_end: float
    t: float = 0.0
    stops: tuple = ()
    dt: float = 0.0
    steps: int = 0
    _pending: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not self.t_end > 0.0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        self._pending = sorted(s for s in set(self.stops) if self.t < s < self.t_end)

    @property
    def done(self):
        return self.t >= self.t_end

    def clip(self, dt_raw):
        if not dt_raw > 0.0:
            raise ZeroTimeStep(f"time step must be positive, got {dt_raw}")
        target = self._pending[0] if self._pending else self.t_end
        return min(dt_raw, target - self.t)

    def advance(self, dt):
        target = self._pending[0] if self._pending else self.t_end
        # land exactly on stops instead of accumulating roundoff past them
        self.t = target if self.t + dt >= target else self.t + dt
        if self._pending and self.t >= self._pending[0]:
            self._pending.pop(0)
        self.dt = dt
        self.steps += 1
        return self.t


@dataclass
class StepInfo:
    t: float
    dt: float
    ch: float


class FvSolver:
    """Reference uniform-grid solver."""

    def __init__(self, grid, params=None, *, psi_damp_per_stage=True):
        self.grid = grid
        self.params = params or GlmParams()
        self.psi_damp_per_stage = psi_damp_per_stage

    def step(self, controller):
        p = self.params
        g = self.grid
        dt_raw = compute_dt(g, p.gamma, p.c_cfl)
        ch = compute_ch(g.dx, g.dy, dt_raw, p.c_cfl)
        dt = controller.clip(dt_raw)
        g.q = rk2_step(g.q, dt, ch, g.dx, g.dy, p, g.boundary,
                       psi_damp_per_stage=self.psi_damp_per_stage)
        controller.advance(dt)
        return StepInfo(controller.t, dt, ch)
