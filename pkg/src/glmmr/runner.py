"""Run configuration, the step loop, and run comparison."""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .diagnostics import (
    DiagnosticsRecord, DiagnosticsWriter, bdiv_max, energy_integral, helicity_rate,
    l1_density_error,
)
from .errors import ConfigError, IncompatibleRuns
from .fv import FvSolver, TimeController, UniformGrid
from .mr import MrSolver, QuadtreeMesh, ThresholdPolicy, compression_ratio
from .physics import GlmParams
from .problems import PROBLEMS, get_problem
from .snapshots import load_snapshot, save_snapshot

log = logging.getLogger(__name__)

MODES = ("fv-uniform", "mr")
MIN_LEVEL, MAX_LEVEL = 3, 12


@dataclass
class RunConfig:
    problem: str = "riemann2d"
    mode: str = "fv-uniform"
    level: int = 6
    threshold_mode: str = "harten"
    epsilon: float = 0.01
    epsilon0: float = 0.01
    gamma: float = 5.0 / 3.0
    cfl: float = 0.3
    cp2_over_ch: float = 0.18
    t_end: float = 0.1
    snapshots: tuple = ()
    out: str = "run"
    psi_damp_per_stage: bool = True

    def __post_init__(self):
        self.snapshots = tuple(float(s) for s in self.snapshots)
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not MIN_LEVEL <= self.level <= MAX_LEVEL:
            raise ConfigError(f"level must lie in [{MIN_LEVEL}, {MAX_LEVEL}], got {self.level}")
        if self.threshold_mode not in ("constant", "harten"):
            raise ConfigError(f"unknown threshold mode {self.threshold_mode!r}")
        if self.epsilon < 0.0 or self.epsilon0 < 0.0:
            raise ConfigError("thresholds must be non-negative")
        if not self.t_end > 0.0:
            raise ConfigError("t_end must be positive")
        if any(s < 0.0 or s > self.t_end for s in self.snapshots):
            raise ConfigError("snapshot times must lie in [0, t_end]")
        try:
            self.params
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def params(self):
        return GlmParams(self.gamma, self.cfl, self.cp2_over_ch)

    def policy(self, domain_area):
        return ThresholdPolicy(self.threshold_mode, self.epsilon, self.epsilon0,
                               domain_area=domain_area, max_level=self.level)

    def to_dict(self):
        d = asdict(self)
        d["snapshots"] = list(self.snapshots)
        return d


# keys of the key=value config file, spelled like the command-line flags
CONFIG_KEYS = {f.name.replace("_", "-"): f.name for f in fields(RunConfig)}


def _coerce(name, text):
    kind = {f.name: f.type for f in fields(RunConfig)}[name]
    if kind == "bool":
        low = text.strip().lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError(f"{name}: expected a boolean, got {text!r}")
        return low in ("true", "1", "yes")
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    if kind == "tuple":
        return tuple(float(s) for s in text.replace(",", " ").split())
    return text.strip()


def parse_config_text(text):
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        name = CONFIG_KEYS.get(key) or (key if key in CONFIG_KEYS.values() else None)
        if name is None:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[name] = _coerce(name, value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from exc
    return values


def load_config_file(path):
    return parse_config_text(Path(path).read_text())


# ---------------------------------------------------------------------------

@dataclass
class RunResult:
    config: RunConfig
    state: object  # UniformGrid or QuadtreeMesh
    records: list
    snapshots: list = field(default_factory=list)
    compression: float = 100.0
    peak_memory: int = 0
    out_dir: Path | None = None

    def uniform_state(self):
        return _uniform_q(self.state)


def _record(state, info, t_prev_leaf_counts, n_full):
    leaves = getattr(info, "leaf_count", n_full)
    virtual = getattr(info, "virtual_count", 0)
    t_prev_leaf_counts.append(leaves)
    return DiagnosticsRecord(
        t=info.t, dt=info.dt, ch=info.ch, bdiv_max=bdiv_max(state),
        energy=energy_integral(state), helicity_rate=helicity_rate(state),
        leaf_count=leaves, virtual_count=virtual,
        dc_running=compression_ratio(t_prev_leaf_counts, n_full),
    )


def build_solver(config):
    problem = get_problem(config.problem)
    q0 = problem.initial_state(config.level)
    if config.mode == "fv-uniform":
        grid = UniformGrid(q0, problem.xlim, problem.ylim, problem.boundary)
        return FvSolver(grid, config.params, psi_damp_per_stage=config.psi_damp_per_stage)
    area = (problem.xlim[1] - problem.xlim[0]) * (problem.ylim[1] - problem.ylim[0])
    return MrSolver.from_finest(q0, config.policy(area), config.params, problem.boundary,
                                psi_damp_per_stage=config.psi_damp_per_stage)


def _state_of(solver):
    return solver.grid if isinstance(solver, FvSolver) else solver.mesh


def _uniform_q(state):
    if isinstance(state, QuadtreeMesh):
        return state.synthesize(state.max_level)
    return state.q


def run(config, write=True):
    """Advance ``config`` to ``t_end``; with ``write`` the run directory is populated."""
    solver = build_solver(config)
    state = _state_of(solver)
    controller = TimeController(config.t_end, stops=config.snapshots)
    n_full = 4 ** config.level
    out = Path(config.out)
    snaps = []
    meta = {"config": config.to_dict()}

    def snapshot(tag):
        if write:
            path = out / f"snapshot_{tag}.bin"
            save_snapshot(path, _uniform_q(state), config.level, controller.t, config.gamma, meta)
            snaps.append(path)

    if write:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")
    pending = sorted(set(config.snapshots))
    if pending and pending[0] == 0.0:
        snapshot("t0.000000")
        pending.pop(0)

    records, leaf_counts = [], []
    writer = DiagnosticsWriter(out / "diagnostics.csv") if write else None
    try:
        while not controller.done:
            info = solver.step(controller)
            rec = _record(state, info, leaf_counts, n_full)
            records.append(rec)
            if writer:
                writer.write(rec)
            while pending and controller.t >= pending[0]:
                snapshot(f"t{pending.pop(0):.6f}")
    finally:
        if writer:
            writer.close()

    if isinstance(solver, MrSolver):
        compression = solver.compression()
        peak = int(max(solver.memory_history))
    else:
        compression, peak = 100.0, n_full
    result = RunResult(config, state, records, snaps, compression, peak, out if write else None)
    if write:
        save_snapshot(out / "final.bin", _uniform_q(state), config.level, controller.t,
                      config.gamma, meta)
        summary = {"config": config.to_dict(), "steps": controller.steps, "t": controller.t,
                   "compression": compression, "peak_memory": peak}
        (out / "run.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return result


def compare(run_dir, ref_dir):
    """L1 density error of a run against a reference run, with its D_c and peak memory."""
    run_dir, ref_dir = Path(run_dir), Path(ref_dir)
    a = json.loads((run_dir / "run.json").read_text())
    b = json.loads((ref_dir / "run.json").read_text())
    ca, cb = a["config"], b["config"]
    for key in ("problem", "gamma"):
        if ca[key] != cb[key]:
            raise IncompatibleRuns(f"runs differ in {key}: {ca[key]!r} vs {cb[key]!r}")
    if cb["level"] < ca["level"]:
        raise IncompatibleRuns(f"reference level {cb['level']} is below run level {ca['level']}")
    if not np.isclose(a["t"], b["t"], rtol=0.0, atol=1e-12):
        raise IncompatibleRuns(f"final times differ: {a['t']} vs {b['t']}")
    problem = get_problem(ca["problem"])
    sa = load_snapshot(run_dir / "final.bin")
    sb = load_snapshot(ref_dir / "final.bin")
    ga = UniformGrid(sa.q, problem.xlim, problem.ylim, problem.boundary)
    gb = UniformGrid(sb.q, problem.xlim, problem.ylim, problem.boundary)
    return {
        "l1_density_error": l1_density_error(ga, gb),
        "compression": a["compression"],
        "peak_memory": a["peak_memory"],
        "level": ca["level"],
        "reference_level": cb["level"],
    }
