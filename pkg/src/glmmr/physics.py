"""GLM-MHD state algebra: equation of state, physical fluxes, wave speeds.

States are numpy arrays whose leading axis holds the nine components, so a
single state has shape ``(9,)`` and a field of states ``(9, nx, ny)`` or
``(9, N)``. Conserved and primitive vectors share slot positions::

    conserved: rho, E, rho*ux, rho*uy, rho*uz, Bx, By, Bz, psi
    primitive: rho, p, ux,     uy,     uz,     Bx, By, Bz, psi
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveDensity, NonPositivePressure, ZeroTimeStep

log = logging.getLogger(__name__)

NVAR = 9
RHO, EN, MX, MY, MZ, BX, BY, BZ, PSI = range(NVAR)
# primitive aliases
PRS, UX, UY, UZ = EN, MX, MY, MZ

CONSERVED_NAMES = ("rho", "E", "mx", "my", "mz", "Bx", "By", "Bz", "psi")
PRIMITIVE_NAMES = ("rho", "p", "ux", "uy", "uz", "Bx", "By", "Bz", "psi")

# x <-> y coordinate exchange; an involution on slot indices
SWAP_XY = np.array([RHO, EN, MY, MX, MZ, BY, BX, BZ, PSI])

PRESSURE_FLOOR = 1e-12


@dataclass(frozen=True)
class GlmParams:
    """Run-wide constants of the GLM-MHD system.

    ``ch`` is not stored: it is recomputed from the time step every step.
    """

    gamma: float = 5.0 / 3.0
    c_cfl: float = 0.3
    cp2_over_ch: float = 0.18

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")
        if not 0.0 < self.c_cfl < 1.0:
            raise ValueError(f"c_cfl must lie in (0, 1), got {self.c_cfl}")
        if not self.cp2_over_ch > 0.0:
            raise ValueError(f"cp2_over_ch must be positive, got {self.cp2_over_ch}")


def _check_density(rho):
    if np.any(~(rho > 0.0)):
        bad = np.argwhere(~(np.atleast_1d(rho) > 0.0))
        raise NonPositiveDensity(f"non-positive density at {bad[:5].tolist()}")


def to_primitive(q, gamma):
    """Conserved -> primitive. Pressure in (-1e-12, 0] is clamped to 1e-12."""
    q = np.asarray(q, dtype=float)
    rho = q[RHO]
    _check_density(rho)
    w = np.empty_like(q)
    w[RHO] = rho
    w[UX] = q[MX] / rho
    w[UY] = q[MY] / rho
    w[UZ] = q[MZ] / rho
    w[BX:PSI + 1] = q[BX:PSI + 1]
    kin = 0.5 * (q[MX] * w[UX] + q[MY] * w[UY] + q[MZ] * w[UZ])
    mag = 0.5 * (q[BX] ** 2 + q[BY] ** 2 + q[BZ] ** 2)
    p = (gamma - 1.0) * (q[EN] - kin - mag)
    if np.any(p <= 0.0):
        if np.any(~(p > -PRESSURE_FLOOR)):
            bad = np.argwhere(~(np.atleast_1d(p) > -PRESSURE_FLOOR))
            raise NonPositivePressure(f"pressure below floor at {bad[:5].tolist()}")
        log.warning("clamping %d roundoff-negative pressures", int(np.sum(p <= 0.0)))
        p = np.where(p <= 0.0, PRESSURE_FLOOR, p)
    w[PRS] = p
    return w


def to_conserved(w, gamma):
    w = np.asarray(w, dtype=float)
    _check_density(w[RHO])
    if np.any(~(w[PRS] > 0.0)):
        raise NonPositivePressure("primitive state with non-positive pressure")
    q = np.empty_like(w)
    rho = w[RHO]
    q[RHO] = rho
    q[MX] = rho * w[UX]
    q[MY] = rho * w[UY]
    q[MZ] = rho * w[UZ]
    q[BX:PSI + 1] = w[BX:PSI + 1]
    kin = 0.5 * rho * (w[UX] ** 2 + w[UY] ** 2 + w[UZ] ** 2)
    mag = 0.5 * (w[BX] ** 2 + w[BY] ** 2 + w[BZ] ** 2)
    q[EN] = w[PRS] / (gamma - 1.0) + kin + mag
    return q


def pressure(q, gamma):
    return to_primitive(q, gamma)[PRS]


def total_pressure(w):
    """p + |B|^2/2 from a primitive state."""
    return w[PRS] + 0.5 * (w[BX] ** 2 + w[BY] ** 2 + w[BZ] ** 2)


def _flux_x_from(q, w, ch):
    ux, uy, uz = w[UX], w[UY], w[UZ]
    bx, by, bz = w[BX], w[BY], w[BZ]
    pt = total_pressure(w)
    udotb = ux * bx + uy * by + uz * bz
    f = np.empty_like(q)
    f[RHO] = q[MX]
    f[EN] = (q[EN] + pt) * ux - udotb * bx
    f[MX] = q[MX] * ux + pt - bx * bx
    f[MY] = q[MX] * uy - bx * by
    f[MZ] = q[MX] * uz - bx * bz
    f[BX] = w[PSI]
    f[BY] = ux * by - bx * uy
    f[BZ] = ux * bz - bx * uz
    f[PSI] = ch * ch * bx
    return f


def physical_flux_x(q, gamma, ch):
    """x-direction GLM-MHD flux of conserved state(s) ``q``."""
    q = np.asarray(q, dtype=float)
    return _flux_x_from(q, to_primitive(q, gamma), ch)


def physical_flux_y(q, gamma, ch):
    """y-direction flux, obtained by exchanging the x and y roles."""
    q = np.asarray(q, dtype=float)
    return physical_flux_x(q[SWAP_XY], gamma, ch)[SWAP_XY]


def fast_speed(w, bn, gamma):
    """Fast magnetosonic speed for normal field component ``bn``.

    c_f^2 = (a + sqrt(a^2 - 4 gamma p bn^2)) / (2 rho),  a = gamma p + |B|^2
    """
    rho = w[RHO]
    gp = gamma * w[PRS]
    b2 = w[BX] ** 2 + w[BY] ** 2 + w[BZ] ** 2
    a = gp + b2
    disc = a * a - 4.0 * gp * bn * bn
    # negative only through roundoff (bn^2 <= |B|^2)
    assert np.all(disc >= -1e-15 * np.maximum(a * a, 1.0)), "fast-speed discriminant"
    disc = np.maximum(disc, 0.0)
    return np.sqrt((a + np.sqrt(disc)) / (2.0 * rho))


def sound_speed(w, gamma):
    return np.sqrt(gamma * w[PRS] / w[RHO])


def compute_ch(dx, dy, dt, c_cfl):
    """Hyperbolic cleaning speed c_cfl * min(dx, dy) / dt."""
    if not dt > 0.0:
        raise ZeroTimeStep(f"time step must be positive, got {dt}")
    if not (dx > 0.0 and dy > 0.0):
        raise ValueError("cell sizes must be positive")
    return c_cfl * min(dx, dy) / dt
