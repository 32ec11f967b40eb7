"""Initial conditions and the problem registry."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainMismatch
from .physics import BX, BY, BZ, EN, MX, MZ, NVAR, PRS, PSI, RHO, UX, to_conserved

RIEMANN_DOMAIN = ((-1.0, 1.0), (-1.0, 1.0))

# conserved quadrant states (rho, E, rho*u, B), keyed by the signs of (x, y).
# This placement makes the normal field continuous across both axes, so the
# initial B is divergence-free: Bx depends on y only and By on x only.
RIEMANN_QUADRANTS = {
    ("-", "-"): dict(rho=1.0, mom=(1.75, -1.0, 0.0), E=6.0, B=(0.5642, 0.5078, 0.2539)),
    ("+", "-"): dict(rho=1.8887, mom=(0.2334, -1.7422, 0.0733), E=12.999,
                     B=(0.5642, 0.9830, 0.4915)),
    ("-", "+"): dict(rho=1.0304, mom=(1.5774, -1.0455, -0.1016), E=5.7813,
                     B=(0.3501, 0.5078, 0.1576)),
    ("+", "+"): dict(rho=0.9308, mom=(1.4557, -0.4633, 0.0575), E=5.0838,
                     B=(0.3501, 0.9830, 0.3050)),
}


def quadrant_state(key):
    s = RIEMANN_QUADRANTS[key]
    q = np.zeros(NVAR)
    q[RHO] = s["rho"]
    q[EN] = s["E"]
    q[MX:MZ + 1] = s["mom"]
    q[BX:BZ + 1] = s["B"]
    q[PSI] = 0.0
    return q


def _place_quadrants(X, Y, xlim, ylim, transpose):
    if (tuple(xlim), tuple(ylim)) != RIEMANN_DOMAIN:
        raise DomainMismatch(f"the quadrant problem lives on [-1,1]^2, got {xlim} x {ylim}")
    q = np.empty((NVAR,) + np.shape(X))
    for (sx, sy) in RIEMANN_QUADRANTS:
        if transpose:
            sx, sy = sy, sx
        mask = ((X > 0) == (sx == "+")) & ((Y > 0) == (sy == "+"))
        q[:, mask] = quadrant_state((sy, sx) if transpose else (sx, sy))[:, None]
    return q


def init_riemann2d(X, Y, xlim=(-1.0, 1.0), ylim=(-1.0, 1.0)):
    """Four-quadrant MHD Riemann data evaluated at cell centres ``X, Y``."""
    return _place_quadrants(X, Y, xlim, ylim, transpose=False)


def init_riemann2d_offdiagonal_swapped(X, Y, xlim=(-1.0, 1.0), ylim=(-1.0, 1.0)):
    """Same states with the two off-diagonal quadrants exchanged.

    Here Bx jumps across x = 0 and By across y = 0, so the data carry an
    initial divergence error along both axes.
    """
    return _place_quadrants(X, Y, xlim, ylim, transpose=True)


def init_uniform(X, Y, xlim=None, ylim=None):
    w = np.zeros((NVAR,) + np.shape(X))
    w[RHO] = 1.0
    w[PRS] = 1.0
    w[UX] = 0.5
    w[BX] = 0.3
    w[BY] = 0.2
    return to_conserved(w, 5.0 / 3.0)


def init_smooth(X, Y, xlim=(-1.0, 1.0), ylim=(-1.0, 1.0)):
    """Density wave advected diagonally in a uniform field (periodic)."""
    w = np.zeros((NVAR,) + np.shape(X))
    w[RHO] = 1.0 + 0.2 * np.sin(np.pi * X) * np.sin(np.pi * Y)
    w[PRS] = 1.0
    w[UX] = 1.0
    w[UX + 1] = 0.5
    w[BX] = 0.1
    w[BY] = 0.05
    return to_conserved(w, 5.0 / 3.0)


@dataclass(frozen=True)
class Problem:
    name: str
    init: Callable
    boundary: str
    xlim: tuple = (-1.0, 1.0)
    ylim: tuple = (-1.0, 1.0)

    def cell_centers(self, level):
        n = 2 ** level
        x = self.xlim[0] + (np.arange(n) + 0.5) * (self.xlim[1] - self.xlim[0]) / n
        y = self.ylim[0] + (np.arange(n) + 0.5) * (self.ylim[1] - self.ylim[0]) / n
        return np.meshgrid(x, y, indexing="ij")

    def initial_state(self, level):
        X, Y = self.cell_centers(level)
        return self.init(X, Y, self.xlim, self.ylim)


PROBLEMS = {
    "riemann2d": Problem("riemann2d", init_riemann2d, "neumann"),
    "riemann2d-periodic": Problem("riemann2d-periodic", init_riemann2d, "periodic"),
    "riemann2d-swapped": Problem("riemann2d-swapped", init_riemann2d_offdiagonal_swapped,
                                 "neumann"),
    "uniform": Problem("uniform", init_uniform, "periodic"),
    "smooth": Problem("smooth", init_smooth, "periodic"),
}


def get_problem(name):
    try:
        return PROBLEMS[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
