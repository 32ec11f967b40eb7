"""Acceptance criteria 1-12, one PASS/FAIL line each."""
import time

import numpy as np
import pytest

from conftest import GAMMA, random_conserved
from glmmr.diagnostics import energy_mean, l1_density_error
from glmmr.fv import FvSolver, TimeController, UniformGrid, damp_psi, rk2_step
from glmmr.mr import MrSolver, QuadtreeMesh, ThresholdPolicy, predict
from glmmr.physics import BX, BZ, EN, PSI, RHO, GlmParams, physical_flux_x
from glmmr.problems import get_problem
from glmmr.riemann import glm_interface, hlld_fan, hlld_flux, resolve_normal_field
from reference_runs import fv_run, mr_run, series, window_max

PARAMS = GlmParams()
HLLD_SLOTS = [RHO, EN, 2, 3, 4, 6, 7]

# first audited run (t = 0.1, eps0 = 0.01, harten)
PINNED_DC = {6: 32.955496651785715, 7: 20.42346632624247, 8: 12.322924510542169}


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        assert ok, detail
    return emit


def star_flux(q, pt):
    rho, E, mx, my, mz, bx, by, bz = q[:8]
    ux, uy, uz = mx / rho, my / rho, mz / rho
    ub = ux * bx + uy * by + uz * bz
    return np.array([mx, (E + pt) * ux - bx * ub, mx * ux + pt - bx * bx, mx * uy - bx * by,
                     mx * uz - bx * bz, 0 * rho, ux * by - bx * uy, ux * bz - bx * uz, 0 * rho])


def test_criterion_01_hlld_consistency(rng, report):
    q = random_conserved(rng, 100_000)
    t0 = time.perf_counter()
    F = hlld_flux(q, q, GAMMA, 1.7)
    elapsed = time.perf_counter() - t0
    ref = physical_flux_x(q, GAMMA, 1.7)
    err = np.max(np.abs(F - ref) / np.maximum(np.abs(ref), 1.0))
    report(1, err <= 1e-14 and elapsed < 10.0,
           f"max slot deviation {err:.2e} (<= 1e-14) on 1e5 states in {elapsed:.2f} s")


def test_criterion_02_outer_jump_conditions(random_pairs, report):
    qL, qR = random_pairs(10_000)
    qL, qR, _ = resolve_normal_field(qL, qR, 1.0)
    fan = hlld_fan(qL, qR, GAMMA)
    worst = 0.0
    for q, qs, S, w in ((fan.qL, fan.qL_star, fan.sL, fan.wL), (fan.qR, fan.qR_star, fan.sR, fan.wR)):
        pt = w[1] + 0.5 * np.sum(q[BX:BZ + 1] ** 2, axis=0)
        F, Fs = star_flux(q, pt), star_flux(qs, fan.pT_star)
        lhs = (Fs - F)[HLLD_SLOTS]
        rhs = (S * (qs - q))[HLLD_SLOTS]
        scale = np.maximum(np.max(np.abs(F[HLLD_SLOTS]) + np.abs(Fs[HLLD_SLOTS]), axis=0), 1.0)
        worst = max(worst, float(np.max(np.max(np.abs(lhs - rhs), axis=0) / scale)))
    report(2, worst <= 1e-10, f"max relative jump residual {worst:.2e} (<= 1e-10) on 1e4 pairs")


def test_criterion_03_glm_characteristics(rng, report):
    n = 10_000
    bl, pl, br, pr = rng.uniform(-2, 2, (4, n))
    ch = rng.uniform(0.1, 10.0, n)
    sol = glm_interface(bl, pl, br, pr, ch)
    worst = 0.0
    for k in range(n):
        # eigenvectors of [[0, 1], [ch^2, 0]]: (1, +ch) right-moving, (1, -ch) left-moving
        R = np.array([[1.0, 1.0], [ch[k], -ch[k]]])
        a_left = np.linalg.solve(R, [bl[k], pl[k]])
        a_right = np.linalg.solve(R, [br[k], pr[k]])
        qm = R @ np.array([a_left[0], a_right[1]])
        dev = np.abs(qm - [sol.bn_m[k], sol.psi_m[k]]) / np.maximum(np.abs(qm), 1.0)
        worst = max(worst, dev.max())
    report(3, worst <= 1e-14, f"max deviation from characteristic oracle {worst:.2e} (<= 1e-14)")


def test_criterion_04_prediction_exactness(report):
    L = 6
    n = 2 ** L
    h = 2.0 / n
    lo = -1.0 + np.arange(n) * h
    X0, Y0 = np.meshgrid(lo, lo, indexing="ij")
    # exact cell averages of the monomials of degree <= 2
    ix = {0: h, 1: ((X0 + h) ** 2 - X0 ** 2) / 2, 2: ((X0 + h) ** 3 - X0 ** 3) / 3}
    iy = {0: h, 1: ((Y0 + h) ** 2 - Y0 ** 2) / 2, 2: ((Y0 + h) ** 3 - Y0 ** 3) / 3}
    worst = 0.0
    for a, b in [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]:
        avg = ix[a] * iy[b] / (h * h)
        mesh = QuadtreeMesh.full(np.broadcast_to(avg, (9, n, n)).copy())
        # a quadratic needs three parent cells per direction: levels 3..L
        for l in range(3, L + 1):
            res = mesh.q[l] - predict(mesh.q[l - 1], "extrapolate")
            worst = max(worst, float(np.max(np.abs(res))))
    report(4, worst <= 1e-12,
           f"max detail {worst:.2e} (<= 1e-12) over monomials of degree <= 2, "
           f"full tree L=6, every level with a complete stencil (3..6)")


def test_criterion_05_keep_all_equivalence(report):
    prob = get_problem("riemann2d")
    q0 = prob.initial_state(6)
    fv = FvSolver(UniformGrid(q0.copy()), PARAMS)
    mr = MrSolver.from_finest(q0, ThresholdPolicy("constant", epsilon=0.0, max_level=6), PARAMS)
    tf, tm = TimeController(0.05), TimeController(0.05)
    while not tf.done:
        fv.step(tf)
    while not tm.done:
        mr.step(tm)
    same = np.array_equal(mr.mesh.synthesize(6), fv.grid.q) and tf.steps == tm.steps
    diff = np.max(np.abs(mr.mesh.synthesize(6) - fv.grid.q))
    report(5, same, f"eps=0 MR vs FV at L=6, t=0.05: max difference {diff:.1e}, "
                    f"{tm.steps} vs {tf.steps} steps")


@pytest.mark.slow
def test_criterion_06_energy(report):
    initial = [energy_mean(UniformGrid(get_problem("riemann2d").initial_state(L))) for L in (6, 7, 8)]
    _, hist = fv_run(8)
    final = hist[-1]["energy"]
    ok = all(abs(e - 3.69) <= 0.01 for e in initial) and 3.40 <= final <= 3.55
    report(6, ok, f"initial mean energy {', '.join(f'{e:.4f}' for e in initial)} (L=6,7,8; 3.69 +/- 0.01); "
                  f"L=8 uniform at t=0.1: {final:.4f} (in [3.40, 3.55])")


@pytest.mark.slow
def test_criterion_07_divergence_bounded(report):
    ratios = {}
    for name, (_, hist) in (("uniform", fv_run(7)), ("mr", mr_run(7, audit=True))):
        ratios[name] = window_max(hist, "bdiv", 0.05, 0.1) / window_max(hist, "bdiv", 0.02, 0.05)
    ok = all(r <= 1.5 for r in ratios.values())
    report(7, ok, "max B_div[0.05,0.1] / max B_div[0.02,0.05] at L=7: "
                  + ", ".join(f"{k} {v:.3f}" for k, v in ratios.items()) + " (<= 1.5)")


def test_criterion_08_psi_damping(report):
    n = 8
    q = np.zeros((9, n, n))
    q[RHO], q[EN] = 1.0, 2.0
    q[PSI] = np.linspace(-1.0, 1.0, n * n).reshape(n, n)
    psi0 = q[PSI].copy()
    ch, t = 3.0, 0.0
    worst = 0.0
    a, b = q.copy(), q.copy()
    for dt in (1e-3, 2.5e-3, 4e-4, 1e-2, 7e-3):
        t += dt
        a = damp_psi(a, dt, ch, 0.18)
        b = rk2_step(b, dt, ch, 0.25, 0.25, PARAMS, advect=False, psi_damp_per_stage=False)
        exact = psi0 * np.exp(-t * ch / 0.18)
        worst = max(worst, np.max(np.abs(a[PSI] - exact)), np.max(np.abs(b[PSI] - exact)))
    untouched = np.array_equal(b[:PSI], q[:PSI])
    report(8, worst <= 1e-12 and untouched,
           f"max |psi - psi0 exp(-t ch/0.18)| = {worst:.2e} (<= 1e-12), advection frozen")


@pytest.mark.slow
def test_criterion_09_helicity(report):
    _, hist = mr_run(7, mode="constant", eps=0.0)
    worst = float(np.max(np.abs(series(hist, "helicity"))))
    report(9, worst < 1e-10, f"max |dH/dt| = {worst:.2e} over eps=0, L=7, t <= 0.1 (< 1e-10)")


@pytest.mark.slow
def test_criterion_10_compression_trend(report):
    dc = {L: mr_run(L, audit=(L == 7))[0].compression() for L in (6, 7, 8)}
    monotone = dc[6] > dc[7] > dc[8]
    pinned = all(abs(dc[L] - PINNED_DC[L]) <= 1e-6 * PINNED_DC[L] for L in dc)
    report(10, monotone and pinned,
           "D_c at t=0.1, eps0=0.01: " + ", ".join(f"L={L} {v:.3f}%" for L, v in dc.items())
           + " (decreasing; pinned to first audited run)")


@pytest.mark.slow
def test_criterion_11_error_vs_threshold(report):
    ref, _ = fv_run(8)
    errs = [l1_density_error(mr_run(7, mode="constant", eps=e)[0].mesh, ref.grid)
            for e in (0.01, 0.008, 0.005, 0.0)]
    ok = all(a >= b for a, b in zip(errs, errs[1:]))
    report(11, ok, "L1(rho) at L=7 vs uniform L=8, eps 0.01/0.008/0.005/0: "
                   + ", ".join(f"{e:.5f}" for e in errs) + " (non-increasing)")


def _budget_residuals(solver, state_totals, t_end):
    tc = TimeController(t_end)
    before = state_totals()
    worst = 0.0
    keep = [k for k in range(9) if k != PSI]
    while not tc.done:
        solver.step(tc)
        after = state_totals()
        scale = np.maximum(np.abs(before), 1.0)
        worst = max(worst, float(np.max(np.abs(after - before)[keep] / scale[keep])))
        before = after
    return worst, tc.steps


def test_criterion_12_periodic_conservation(report):
    prob = get_problem("riemann2d-periodic")
    L = 6
    grid = UniformGrid(prob.initial_state(L), prob.xlim, prob.ylim, "periodic")
    fv = FvSolver(grid, PARAMS)
    w_fv, n_fv = _budget_residuals(fv, lambda: grid.q.sum(axis=(1, 2)) * grid.cell_area, 0.03)
    mr = MrSolver.from_finest(prob.initial_state(L), ThresholdPolicy("harten", max_level=L),
                              PARAMS, "periodic")

    def leaf_totals():
        q, area = mr.mesh.leaf_states()
        return (q * area).sum(axis=1)

    w_mr, n_mr = _budget_residuals(mr, leaf_totals, 0.03)
    jumps = sum(1 for l in range(L + 1) if mr.mesh.leaves(l).any()) >= 3
    report(12, w_fv <= 1e-12 and w_mr <= 1e-12 and jumps,
           f"per-step relative drift of rho, E, rho u, B totals: uniform {w_fv:.1e} ({n_fv} steps), "
           f"MR {w_mr:.1e} ({n_mr} steps, level jumps present) (<= 1e-12)")
