import numpy as np
import pytest

from conftest import GAMMA, random_conserved
from glmmr.errors import EmptyGrid, ZeroTimeStep
from glmmr.fv import (
    FvSolver, TimeController, UniformGrid, apply_neumann, compute_dt, damp_psi, pad_cells,
    rk2_step, signal_dt, swap_axes, sweep_x, sweep_y,
)
from glmmr.physics import (
    BX, BY, EN, MX, PSI, RHO, SWAP_XY, GlmParams, physical_flux_x, to_conserved,
)
from glmmr.problems import get_problem
from glmmr.riemann import hlld_flux

PARAMS = GlmParams()


def uniform_field(nx, ny, w):
    q = to_conserved(np.asarray(w, dtype=float), GAMMA)
    return np.broadcast_to(q[:, None, None], (9, nx, ny)).copy()


@pytest.fixture
def quadrant_grid():
    prob = get_problem("riemann2d")
    return UniformGrid(prob.initial_state(6), prob.xlim, prob.ylim, prob.boundary)


class TestGrid:
    def test_geometry(self):
        g = UniformGrid(np.ones((9, 8, 4)) * [[[1.0]]], (-1.0, 1.0), (0.0, 1.0))
        assert (g.nx, g.ny) == (8, 4)
        assert g.nx * g.dx == pytest.approx(2.0)
        assert g.ny * g.dy == pytest.approx(1.0)
        X, Y = g.centers()
        assert X[0, 0] == pytest.approx(-1.0 + 0.125) and Y[0, 0] == pytest.approx(0.125)

    def test_empty(self):
        with pytest.raises(EmptyGrid):
            UniformGrid(np.zeros((9, 0, 4)))

    def test_bad_shape(self):
        with pytest.raises(ValueError):
            UniformGrid(np.zeros((8, 4, 4)))


class TestTimeStep:
    def test_static_state(self):
        g = UniformGrid(uniform_field(16, 16, [1, 1, 0, 0, 0, 0, 0, 0, 0]))
        h = 2.0 / 16
        assert compute_dt(g, GAMMA, 0.3) == pytest.approx(0.3 * h / np.sqrt(5.0 / 3.0), rel=1e-14)

    def test_resolution_halves_dt(self, rng):
        q = random_conserved(rng, 64).reshape(9, 8, 8)
        fine = np.repeat(np.repeat(q, 2, axis=1), 2, axis=2)
        dt = compute_dt(UniformGrid(q), GAMMA, 0.3)
        assert compute_dt(UniformGrid(fine), GAMMA, 0.3) == pytest.approx(dt / 2, rel=1e-14)

    def test_empty(self):
        with pytest.raises(EmptyGrid):
            signal_dt(np.zeros((9, 0)), 0.1, 0.1, GAMMA, 0.3)

    def test_clipping(self):
        tc = TimeController(t_end=0.1, t=0.099)
        assert tc.clip(0.01) == pytest.approx(0.001)
        tc.advance(tc.clip(0.01))
        assert tc.t == 0.1 and tc.done

    def test_stops_are_hit_exactly(self):
        tc = TimeController(t_end=0.3, stops=(0.1, 0.2, 0.5))
        times = []
        while not tc.done:
            times.append(tc.advance(tc.clip(0.07)))
        assert 0.1 in times and 0.2 in times and times[-1] == 0.3
        assert np.all(np.diff(times) > 0)

    def test_zero_step(self):
        with pytest.raises(ZeroTimeStep):
            TimeController(t_end=1.0).clip(0.0)


class TestSweeps:
    W = [1.3, 0.8, 0.4, -0.2, 0.1, 0.6, 0.3, -0.5, 0.0]

    @pytest.mark.parametrize("boundary", ["neumann", "periodic"])
    def test_uniform_unchanged(self, boundary):
        q = uniform_field(8, 8, self.W)
        for sweep in (sweep_x, sweep_y):
            out = sweep(q, GAMMA, 1.0, 0.01, 0.1, boundary)
            np.testing.assert_allclose(out, q, rtol=1e-15, atol=1e-15)

    def test_fixed_point_100_steps(self):
        q0 = uniform_field(16, 16, self.W)
        q = q0.copy()
        for _ in range(100):
            q = rk2_step(q, 0.002, 1.5, 0.125, 0.125, PARAMS)
        assert np.max(np.abs(q - q0)) < 1e-13

    def test_y_sweep_matches_transposed_x_sweep(self, rng):
        q = random_conserved(rng, 12 * 10).reshape(9, 12, 10)
        via_y = sweep_y(q, GAMMA, 1.2, 0.003, 0.05)
        via_x = swap_axes(sweep_x(swap_axes(q), GAMMA, 1.2, 0.003, 0.05))
        np.testing.assert_array_equal(via_y, via_x)

    def test_rows_reproduce_1d_solver(self, brio_wu):
        qL, qR = brio_wu
        n = 16
        row = np.where(np.arange(n) < n // 2, qL[:, None], qR[:, None])
        q = np.repeat(row[:, :, None], 5, axis=2)
        out = sweep_x(q, GAMMA, 1.0, 0.004, 1.0 / n)
        # independent 1D update with Neumann ends
        padded = np.concatenate([row[:, :1], row, row[:, -1:]], axis=1)
        F = hlld_flux(padded[:, :-1], padded[:, 1:], GAMMA, 1.0)
        ref = row - 0.004 * n * (F[:, 1:] - F[:, :-1])
        for j in range(5):
            np.testing.assert_array_equal(out[:, :, j], ref)

    def test_periodic_conservation(self, rng):
        q = random_conserved(rng, 16 * 16).reshape(9, 16, 16)
        for sweep in (sweep_x, sweep_y):
            out = sweep(q, GAMMA, 1.0, 0.002, 0.125, "periodic")
            change = np.abs(out.sum(axis=(1, 2)) - q.sum(axis=(1, 2)))
            assert np.all(change < 1e-13 * np.maximum(np.abs(q).sum(axis=(1, 2)), 1.0))


class TestBoundaries:
    def test_neumann_ghosts(self):
        q = np.zeros((9, 4, 3))
        q[RHO] = np.arange(4)[:, None] + 1.0
        p = apply_neumann(q)
        np.testing.assert_array_equal(p[:, 2:-2, 2:-2], q)
        np.testing.assert_array_equal(p[RHO, 0, 2:-2], q[RHO, 0])
        np.testing.assert_array_equal(p[RHO, 1, 2:-2], q[RHO, 0])
        np.testing.assert_array_equal(p[RHO, -1, 2:-2], q[RHO, -1])

    def test_constant_ghosts(self):
        p = apply_neumann(np.full((9, 3, 3), 2.5))
        assert np.all(p == 2.5)

    def test_periodic_ghosts(self):
        q = np.arange(9 * 4 * 4, dtype=float).reshape(9, 4, 4)
        p = pad_cells(q, "periodic")
        np.testing.assert_array_equal(p[:, 0, 1:-1], q[:, -1])
        np.testing.assert_array_equal(p[:, 1:-1, -1], q[:, :, 0])

    def test_unknown_boundary(self):
        with pytest.raises(ValueError):
            pad_cells(np.zeros((9, 2, 2)), "reflect")


class TestDamping:
    def test_half_life(self):
        q = np.zeros((9, 2, 2))
        q[PSI] = 1.0
        ch = 2.0
        dt = np.log(2.0) * 0.18 / ch
        np.testing.assert_allclose(damp_psi(q, dt, ch, 0.18)[PSI], 0.5, rtol=1e-15)

    def test_zero_dt_identity(self, rng):
        q = random_conserved(rng, 16).reshape(9, 4, 4)
        np.testing.assert_array_equal(damp_psi(q, 0.0, 3.0, 0.18), q)

    def test_zero_psi_stays_zero(self):
        assert np.all(damp_psi(np.zeros((9, 3, 3)), 0.1, 1.0, 0.18)[PSI] == 0.0)

    def test_monotone_decay(self):
        q = np.zeros((9, 1, 1))
        q[PSI] = -0.7
        mags = []
        for _ in range(20):
            q = damp_psi(q, 0.01, 1.0, 0.18)
            mags.append(abs(q[PSI, 0, 0]))
        assert np.all(np.diff(mags) < 0)

    def test_per_stage_factor(self):
        q = uniform_field(4, 4, [1, 1, 0, 0, 0, 0, 0, 0, 0.4])
        dt, ch = 0.01, 2.0
        f = np.exp(-dt * ch / 0.18)
        per_step = rk2_step(q, dt, ch, 0.5, 0.5, PARAMS, advect=False, psi_damp_per_stage=False)
        per_stage = rk2_step(q, dt, ch, 0.5, 0.5, PARAMS, advect=False, psi_damp_per_stage=True)
        np.testing.assert_allclose(per_step[PSI], 0.4 * f, rtol=1e-14)
        np.testing.assert_allclose(per_stage[PSI], 0.4 * (1 + f * f) / 2, rtol=1e-14)


def boundary_budget(q, dt, ch, d, axis):
    """Change of the cell sums across one sweep, from the boundary faces alone."""
    qa = q if axis == 0 else swap_axes(q)
    Fin = physical_flux_x(qa[:, 0], GAMMA, ch)
    Fout = physical_flux_x(qa[:, -1], GAMMA, ch)
    budget = -(dt / d) * (Fout - Fin).sum(axis=1)
    return budget if axis == 0 else budget[SWAP_XY]


def test_conservation_ledger(quadrant_grid):
    """Cell sums change only by the Neumann boundary fluxes, step by step."""
    g = quadrant_grid
    h = g.dx
    slots = [RHO, EN, MX, MX + 1, MX + 2, BX, BY, BX + 2]
    q = g.q.copy()
    for _ in range(10):
        dt = signal_dt(q, h, h, GAMMA, PARAMS.c_cfl)
        ch = PARAMS.c_cfl * h / dt
        budget = np.zeros(9)
        s = q
        for _stage in range(2):
            budget += boundary_budget(s, dt, ch, h, 0)
            s = sweep_x(s, GAMMA, ch, dt, h)
            budget += boundary_budget(s, dt, ch, h, 1)
            s = sweep_y(s, GAMMA, ch, dt, h)
            s = damp_psi(s, dt, ch, PARAMS.cp2_over_ch)
        q_new = rk2_step(q, dt, ch, h, h, PARAMS)
        change = q_new.sum(axis=(1, 2)) - q.sum(axis=(1, 2))
        scale = np.abs(q).sum(axis=(1, 2))
        np.testing.assert_allclose(change[slots], 0.5 * budget[slots], rtol=0, atol=1e-12 * scale.max())
        q = q_new


def test_second_order_in_time():
    """Heun order measured by dt refinement at a fixed grid and fixed ch."""
    n = 64
    x = -1.0 + (np.arange(n) + 0.5) * (2.0 / n)
    w = np.zeros((9, n, 4))
    w[RHO], w[EN] = 1.0, 1.0
    w[BX] = 0.5 + 0.1 * np.sin(np.pi * x)[:, None]
    w[PSI] = 0.1 * np.cos(np.pi * x)[:, None]
    q0 = to_conserved(w, GAMMA)
    h = 2.0 / n
    ch = 2.0
    T = 0.2

    def run(m):
        dt = T / m
        q = q0
        for _ in range(m):
            q = rk2_step(q, dt, ch, h, h, PARAMS, "periodic", damp=False)
        return q

    ref = run(640)
    errs = [np.abs(run(m) - ref).sum() * h * h for m in (10, 20, 40)]
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all((rates >= 1.7) & (rates <= 2.2)), rates


def test_solver_reaches_t_end_and_is_deterministic(quadrant_grid):
    outs = []
    for _ in range(2):
        solver = FvSolver(quadrant_grid.copy(), PARAMS)
        tc = TimeController(t_end=0.01, stops=(0.005,))
        infos = []
        while not tc.done:
            infos.append(solver.step(tc))
        assert infos[-1].t == 0.01
        assert any(i.t == 0.005 for i in infos)
        assert all(i.dt > 0 and i.ch > 0 for i in infos)
        outs.append(solver.grid.q)
    np.testing.assert_array_equal(outs[0], outs[1])


def test_ch_uses_unclipped_step(quadrant_grid):
    g = quadrant_grid.copy()
    dt_raw = compute_dt(g, GAMMA, PARAMS.c_cfl)
    tc = TimeController(t_end=dt_raw / 10)
    info = FvSolver(g, PARAMS).step(tc)
    assert info.dt == pytest.approx(dt_raw / 10)
    assert info.ch == pytest.approx(PARAMS.c_cfl * g.dx / dt_raw)


def test_y_sweep_is_identity_on_x_only_data(rng):
    q = np.repeat(random_conserved(rng, 8)[:, :, None], 6, axis=2)
    out = sweep_y(q, GAMMA, 1.0, 0.01, 0.1)
    np.testing.assert_allclose(out, q, rtol=1e-14, atol=1e-14)
