"""Error and compression against the threshold, in the shape of a results table.

A uniform run one level finer serves as the reference. Each adaptive run uses
a constant threshold on every level; eps = 0 keeps the whole tree.

    python3 demos/threshold_study.py [level]
"""
import sys

from glmmr import FvSolver, MrSolver, ThresholdPolicy, TimeController, UniformGrid, get_problem
from glmmr.diagnostics import l1_density_error

level = int(sys.argv[1]) if len(sys.argv) > 1 else 5
prob = get_problem("riemann2d")


def advance(solver, t_end=0.1):
    tc = TimeController(t_end)
    while not tc.done:
        solver.step(tc)
    return solver


ref = advance(FvSolver(UniformGrid(prob.initial_state(level + 1)))).grid
uniform = advance(FvSolver(UniformGrid(prob.initial_state(level)))).grid
print(f"reference: uniform level {level + 1}")
print(f"{'run':>18} {'L1(rho)':>10} {'D_c %':>7} {'peak cells':>11}")
print(f"{'uniform':>18} {l1_density_error(uniform, ref):10.5f} {100.0:7.1f} {4 ** level:11d}")
for eps in (0.01, 0.008, 0.005, 0.0):
    policy = ThresholdPolicy("constant", epsilon=eps, max_level=level)
    mr = advance(MrSolver.from_finest(prob.initial_state(level), policy))
    print(f"{f'eps = {eps}':>18} {l1_density_error(mr.mesh, ref):10.5f} "
          f"{mr.compression():7.1f} {max(mr.memory_history):11d}")
