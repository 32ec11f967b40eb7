"""Interface fluxes: exact (Bn, psi) GLM sub-problem plus HLLD for the rest.

All functions broadcast over trailing axes: a state is ``(9,)`` or ``(9, N)``.
The x-direction is the normal direction; y-direction fluxes are obtained by
permuting slots with :data:`glmmr.physics.SWAP_XY`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveCh, SolverFailure
from .physics import (
    BX, BY, BZ, EN, MX, MY, MZ, PRS, PSI, RHO, SWAP_XY, UX, UY, UZ,
    _flux_x_from, fast_speed, to_primitive, total_pressure,
)

# relative size below which the star-state denominator is treated as zero
DEGENERATE_TOL = 1e-12
# |Bx| below this fraction of (|B| + sqrt(p)) skips the double-star stage
BX_ZERO_TOL = 1e-12


@dataclass
class GlmInterfaceSolution:
    bn_m: np.ndarray
    psi_m: np.ndarray


@dataclass
class HlldWaveFan:
    sL: np.ndarray
    sLstar: np.ndarray
    sM: np.ndarray
    sRstar: np.ndarray
    sR: np.ndarray
    qL: np.ndarray
    qL_star: np.ndarray
    qL_2star: np.ndarray
    qR_2star: np.ndarray
    qR_star: np.ndarray
    qR: np.ndarray
    pT_star: np.ndarray
    degenerate_L: np.ndarray
    degenerate_R: np.ndarray
    bx_zero: np.ndarray
    alfven_clamped: np.ndarray
    wL: np.ndarray
    wR: np.ndarray


def glm_interface(bn_L, psi_L, bn_R, psi_R, ch):
    """Exact Riemann solution of the linear (Bn, psi) system at the interface.

    The interface flux for the (Bn, psi) slots is ``(psi_m, ch**2 * bn_m)``.
    """
    if np.any(~(np.asarray(ch) > 0.0)):
        raise NonPositiveCh(f"cleaning speed must be positive, got {ch}")
    bn_m = 0.5 * (bn_L + bn_R) - (psi_R - psi_L) / (2.0 * ch)
    psi_m = 0.5 * (psi_L + psi_R) - 0.5 * ch * (bn_R - bn_L)
    return GlmInterfaceSolution(bn_m, psi_m)


def hlld_speeds(wL, wR, gamma):
    """Outer signal speeds from primitive states (normal field taken per side)."""
    cf = np.maximum(fast_speed(wL, wL[BX], gamma), fast_speed(wR, wR[BX], gamma))
    sL = np.minimum(wL[UX], wR[UX]) - cf
    sR = np.maximum(wL[UX], wR[UX]) + cf
    return sL, sR


def _star_state(q, w, pt, bx, S, sM, ptS):
    """Single-star state on one side of the fan.

    Returns ``(q_star, uy_star, uz_star, u.B_star, degenerate_mask)``.
    """
    u = w[UX]
    rho = w[RHO]
    ds = S - u
    dsm = S - sM
    ratio = ds / dsm
    rho_s = rho * ratio

    bx2 = bx * bx
    den = rho * ds * dsm - bx2
    num = rho * ds * ds - bx2
    degenerate = np.abs(den) < DEGENERATE_TOL * np.maximum(rho * ds * ds, bx2)
    safe = np.where(degenerate, 1.0, den)
    du = sM - u
    uy_s = np.where(degenerate, w[UY], w[UY] - bx * w[BY] * du / safe)
    uz_s = np.where(degenerate, w[UZ], w[UZ] - bx * w[BZ] * du / safe)
    bfac = num / safe
    by_s = np.where(degenerate, 0.0, w[BY] * bfac)
    bz_s = np.where(degenerate, 0.0, w[BZ] * bfac)

    udotb = u * bx + w[UY] * w[BY] + w[UZ] * w[BZ]
    udotb_s = sM * bx + uy_s * by_s + uz_s * bz_s

    qs = np.empty_like(q)
    qs[RHO] = rho_s
    # base + correction forms keep qs == q bit-for-bit when sM == u
    qs[MX] = q[MX] * ratio + rho_s * du
    qs[MY] = q[MY] * ratio + rho_s * (uy_s - w[UY])
    qs[MZ] = q[MZ] * ratio + rho_s * (uz_s - w[UZ])
    qs[BX] = bx
    qs[BY] = by_s
    qs[BZ] = bz_s
    qs[PSI] = q[PSI]
    qs[EN] = q[EN] * ratio + (ptS * sM - pt * u + bx * (udotb - udotb_s)) / dsm
    return qs, uy_s, uz_s, udotb_s, degenerate


def hlld_fan(qL, qR, gamma):
    """Build the five-wave HLLD fan for conserved states sharing the same Bx.

    The caller resolves the normal field beforehand (see :func:`hlld_flux`);
    ``qL[BX]`` is used as the common value.
    """
    qL = np.asarray(qL, dtype=float)
    qR = np.asarray(qR, dtype=float)
    wL = to_primitive(qL, gamma)
    wR = to_primitive(qR, gamma)
    bx = qL[BX]

    sL, sR = hlld_speeds(wL, wR, gamma)
    uL, uR = wL[UX], wR[UX]
    ptL, ptR = total_pressure(wL), total_pressure(wR)
    aL = (sL - uL) * wL[RHO]
    aR = (sR - uR) * wR[RHO]
    den = aR - aL
    sM = uL + (aR * (uR - uL) - (ptR - ptL)) / den
    ptS = ptL + aL * ((ptL - ptR) + aR * (uR - uL)) / den

    qLs, uyL, uzL, udbL, degL = _star_state(qL, wL, ptL, bx, sL, sM, ptS)
    qRs, uyR, uzR, udbR, degR = _star_state(qR, wR, ptR, bx, sR, sM, ptS)

    sqL = np.sqrt(qLs[RHO])
    sqR = np.sqrt(qRs[RHO])
    absbx = np.abs(bx)
    sgn = np.where(bx >= 0.0, 1.0, -1.0)
    inv = 1.0 / (sqL + sqR)

    byL, byR = qLs[BY], qRs[BY]
    bzL, bzR = qLs[BZ], qRs[BZ]
    sqLR = sqL * sqR
    uy_ss = uyL + (sqR * (uyR - uyL) + (byR - byL) * sgn) * inv
    uz_ss = uzL + (sqR * (uzR - uzL) + (bzR - bzL) * sgn) * inv
    by_ss = byL + (sqL * (byR - byL) + sqLR * (uyR - uyL) * sgn) * inv
    bz_ss = bzL + (sqL * (bzR - bzL) + sqLR * (uzR - uzL) * sgn) * inv
    udb_ss = sM * bx + uy_ss * by_ss + uz_ss * bz_ss

    def double_star(qs, uy, uz, udb_s, sq, side):
        qss = qs.copy()
        qss[MY] = qs[MY] + qs[RHO] * (uy_ss - uy)
        qss[MZ] = qs[MZ] + qs[RHO] * (uz_ss - uz)
        qss[BY] = by_ss
        qss[BZ] = bz_ss
        qss[EN] = qs[EN] + side * sq * (udb_s - udb_ss) * sgn
        return qss

    qLss = double_star(qLs, uyL, uzL, udbL, sqL, -1.0)
    qRss = double_star(qRs, uyR, uzR, udbR, sqR, +1.0)

    sLs = sM - absbx / sqL
    sRs = sM + absbx / sqR
    # the outer-speed estimate does not bound the star Alfven speed; keep the fan ordered
    clamped = (sLs < sL) | (sRs > sR)
    sLs = np.maximum(sLs, sL)
    sRs = np.minimum(sRs, sR)

    bmag = np.maximum(
        np.sqrt(wL[BX] ** 2 + wL[BY] ** 2 + wL[BZ] ** 2),
        np.sqrt(wR[BX] ** 2 + wR[BY] ** 2 + wR[BZ] ** 2),
    )
    bx_zero = absbx < BX_ZERO_TOL * (bmag + np.sqrt(np.maximum(wL[PRS], wR[PRS])))
    if np.any(bx_zero):
        sLs = np.where(bx_zero, sM, sLs)
        sRs = np.where(bx_zero, sM, sRs)
        qLss = np.where(bx_zero, qLs, qLss)
        qRss = np.where(bx_zero, qRs, qRss)

    return HlldWaveFan(
        sL=sL, sLstar=sLs, sM=sM, sRstar=sRs, sR=sR,
        qL=qL, qL_star=qLs, qL_2star=qLss, qR_2star=qRss, qR_star=qRs, qR=qR,
        pT_star=ptS, degenerate_L=degL, degenerate_R=degR, bx_zero=bx_zero,
        alfven_clamped=clamped & ~bx_zero, wL=wL, wR=wR,
    )


def fan_flux(fan, ch):
    """Select the HLLD flux from a fan by the signs of its wave speeds."""
    FL = _flux_x_from(fan.qL, fan.wL, ch)
    FR = _flux_x_from(fan.qR, fan.wR, ch)
    sL, sLs, sM, sRs, sR = fan.sL, fan.sLstar, fan.sM, fan.sRstar, fan.sR

    FLs = FL + sL * (fan.qL_star - fan.qL)
    FRs = FR + sR * (fan.qR_star - fan.qR)
    FLss = FLs + sLs * (fan.qL_2star - fan.qL_star)
    FRss = FRs + sRs * (fan.qR_2star - fan.qR_star)

    return np.where(sL > 0.0, FL,
           np.where(sLs >= 0.0, FLs,
           np.where(sM >= 0.0, FLss,
           np.where(sRs >= 0.0, FRss,
           np.where(sR >= 0.0, FRs, FR)))))


def resolve_normal_field(qL, qR, ch):
    """Replace Bx on both sides by the GLM interface value, keeping pressure.

    Returns the modified states and the interface solution.
    """
    sol = glm_interface(qL[BX], qL[PSI], qR[BX], qR[PSI], ch)
    bm = sol.bn_m
    qL2 = np.array(qL, dtype=float)
    qR2 = np.array(qR, dtype=float)
    qL2[EN] = qL[EN] + 0.5 * (bm * bm - qL[BX] * qL[BX])
    qR2[EN] = qR[EN] + 0.5 * (bm * bm - qR[BX] * qR[BX])
    qL2[BX] = bm
    qR2[BX] = bm
    return qL2, qR2, sol


def hlld_flux(qL, qR, gamma, ch):
    """Full x-direction GLM-MHD interface flux.

    HLLD on the seven MHD components with Bx set to the GLM interface value,
    then the (Bx, psi) slots overwritten by ``(psi_m, ch**2 * bn_m)``.
    """
    qL = np.asarray(qL, dtype=float)
    qR = np.asarray(qR, dtype=float)
    qL2, qR2, sol = resolve_normal_field(qL, qR, ch)
    fan = hlld_fan(qL2, qR2, gamma)
    F = fan_flux(fan, ch)
    F[BX] = sol.psi_m
    F[PSI] = ch * ch * sol.bn_m
    if not np.all(np.isfinite(F)):
        bad = np.argwhere(~np.all(np.isfinite(F), axis=0))
        raise SolverFailure("non-finite HLLD flux", where=bad[:10].tolist())
    return F


def hlld_flux_y(qL, qR, gamma, ch):
    """y-direction flux: x-solver on slot-swapped states, swapped back."""
    return hlld_flux(np.asarray(qL)[SWAP_XY], np.asarray(qR)[SWAP_XY], gamma, ch)[SWAP_XY]


def interface_flux(qL, qR, gamma, ch, axis):
    """Flux across faces normal to ``axis`` (0 = x, 1 = y)."""
    if axis == 0:
        return hlld_flux(qL, qR, gamma, ch)
    return hlld_flux_y(qL, qR, gamma, ch)
