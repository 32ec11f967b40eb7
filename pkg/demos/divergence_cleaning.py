"""How psi carries divergence errors away and damps them.

The printed quadrant placement has jumps in the normal field along both axes,
so div B is large at t = 0. The run records max |div B| and max |psi| with
damping applied at every stage (default) and once per step.

    python3 demos/divergence_cleaning.py [level]
"""
import sys

import numpy as np

from glmmr import FvSolver, TimeController, UniformGrid, get_problem
from glmmr.diagnostics import bdiv_max
from glmmr.physics import PSI

level = int(sys.argv[1]) if len(sys.argv) > 1 else 6
prob = get_problem("riemann2d-swapped")

for per_stage in (True, False):
    grid = UniformGrid(prob.initial_state(level), prob.xlim, prob.ylim, prob.boundary)
    solver = FvSolver(grid, psi_damp_per_stage=per_stage)
    tc = TimeController(0.1, stops=(0.02, 0.04, 0.06, 0.08))
    print(f"\npsi damping {'per stage' if per_stage else 'per step'}")
    print(f"{'t':>6} {'max|div B|':>11} {'max|psi|':>9}")
    print(f"{0.0:6.3f} {bdiv_max(grid):11.4f} {np.abs(grid.q[PSI]).max():9.4f}")
    while not tc.done:
        info = solver.step(tc)
        if round(info.t, 12) in (0.02, 0.04, 0.06, 0.08, 0.1):
            print(f"{info.t:6.3f} {bdiv_max(grid):11.4f} {np.abs(grid.q[PSI]).max():9.4f}")
