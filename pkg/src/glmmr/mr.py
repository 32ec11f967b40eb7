"""Cell-average multiresolution on a graded quadtree.

The tree is stored densely: level ``l`` owns a ``(9, 2**l, 2**l)`` array of
cell averages and a boolean ``exists`` mask. A node is a leaf when it exists
and has no children. After :meth:`QuadtreeMesh.refresh`, every slot holds a
meaningful value: internal nodes carry the mean of their children and absent
cells carry the value predicted from their parent, which is exactly what a
freshly created child or a virtual leaf needs.

Leaves are advanced with the fv kernels. Fluxes are evaluated between
same-level cells (an absent neighbour is stood in for by its predicted value)
and a coarse leaf next to a finer region receives the mean of the two fine
face fluxes, which keeps the update conservative across level jumps.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyHistory, IncompleteStencil, LevelOutOfRange, MaxLevelReached, MissingChild,
    SolverFailure,
)
from .fv import (
    damping_factor, flux_divergence_update, heun_average, rk2_step, signal_dt, swap_axes,
)
from .physics import BX, BY, BZ, EN, MX, MY, MZ, NVAR, PSI, RHO, GlmParams, compute_ch
from .riemann import hlld_flux

PREDICTION_BOUNDARIES = ("neumann", "periodic", "extrapolate")


# ---------------------------------------------------------------------------
# elementary operators

def children_of(a):
    """Split a ``(..., 2n, 2n)`` array into its four ``(..., n, n)`` child planes."""
    return a[..., 0::2, 0::2], a[..., 1::2, 0::2], a[..., 0::2, 1::2], a[..., 1::2, 1::2]


def upsample(a):
    """Copy each cell value to its four children."""
    return np.repeat(np.repeat(a, 2, axis=-2), 2, axis=-1)


def any_child(mask):
    c00, c10, c01, c11 = children_of(mask)
    return c00 | c10 | c01 | c11


def project(children, present=None):
    """Parent averages: the mean of the four children (fixed summation order)."""
    if present is not None:
        c00, c10, c01, c11 = children_of(present)
        if np.any((c00 | c10 | c01 | c11) & ~(c00 & c10 & c01 & c11)):
            raise MissingChild("parent with an incomplete set of children")
    c00, c10, c01, c11 = children_of(children)
    return 0.25 * ((c00 + c10) + (c01 + c11))


def _pad_for_prediction(q, boundary):
    n = q.shape[-1]
    if boundary == "neumann":
        return np.pad(q, ((0, 0), (1, 1), (1, 1)), mode="edge")
    if boundary == "periodic":
        return np.pad(q, ((0, 0), (1, 1), (1, 1)), mode="wrap")
    if boundary == "extrapolate":
        if min(q.shape[-2:]) < 3:
            raise IncompleteStencil("quadratic extrapolation needs at least 3 cells")
        p = np.empty(q.shape[:-2] + (q.shape[-2] + 2, n + 2))
        p[:, 1:-1, 1:-1] = q
        # quadratic extrapolation of cell averages, x first then y (corners too)
        p[:, 0, 1:-1] = 3.0 * q[:, 0] - 3.0 * q[:, 1] + q[:, 2]
        p[:, -1, 1:-1] = 3.0 * q[:, -1] - 3.0 * q[:, -2] + q[:, -3]
        p[:, :, 0] = 3.0 * p[:, :, 1] - 3.0 * p[:, :, 2] + p[:, :, 3]
        p[:, :, -1] = 3.0 * p[:, :, -2] - 3.0 * p[:, :, -3] + p[:, :, -4]
        return p
    raise ValueError(f"unknown boundary {boundary!r}")


def predict(q, boundary="neumann"):
    """Third-order prediction of child averages from a ``(9, n, n)`` parent level.

    Tensor product of the one-dimensional rule
    ``child = parent -/+ (q[i+1] - q[i-1]) / 8``; returns ``(9, 2n, 2n)``.
    """
    q = np.asarray(q, dtype=float)
    if q.ndim != 3 or q.shape[-1] == 0:
        raise IncompleteStencil(f"cannot predict from an array of shape {q.shape}")
    p = _pad_for_prediction(q, boundary)
    c = p[:, 1:-1, 1:-1]
    dx = (p[:, 2:, 1:-1] - p[:, :-2, 1:-1]) / 8.0
    dy = (p[:, 1:-1, 2:] - p[:, 1:-1, :-2]) / 8.0
    dxy = ((p[:, 2:, 2:] - p[:, 2:, :-2]) - (p[:, :-2, 2:] - p[:, :-2, :-2])) / 64.0
    out = np.empty(q.shape[:-2] + (2 * q.shape[-2], 2 * q.shape[-1]))
    for a, sa in ((0, -1.0), (1, 1.0)):
        for b, sb in ((0, -1.0), (1, 1.0)):
            out[:, a::2, b::2] = c + sa * dx + sb * dy + (sa * sb) * dxy
    return out


def _pad_mask(mask, boundary):
    mode = "wrap" if boundary == "periodic" else "constant"
    return np.pad(mask, 1, mode=mode)


def dilate(mask, boundary, diagonal=True):
    """Cells that have a marked cell among their (3x3 or face) neighbours."""
    n0, n1 = mask.shape
    p = _pad_mask(mask, boundary)
    out = mask.copy()
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if (di or dj) and (diagonal or not (di and dj)):
                out |= p[1 + di:1 + di + n0, 1 + dj:1 + dj + n1]
    return out


# ---------------------------------------------------------------------------
# thresholds

@dataclass(frozen=True)
class ThresholdPolicy:
    """Level-dependent significance thresholds.

    ``constant``: the same ``epsilon`` on every level.
    ``harten``: ``epsilon0 / |domain| * 2**(dim * (level - L + 1))``.
    """

    mode: str = "constant"
    epsilon: float = 0.01
    epsilon0: float = 0.01
    domain_area: float = 4.0
    dim: int = 2
    max_level: int = 7

    def __post_init__(self):
        if self.mode not in ("constant", "harten"):
            raise ValueError(f"unknown threshold mode {self.mode!r}")
        if self.epsilon < 0.0 or self.epsilon0 < 0.0:
            raise ValueError("thresholds must be non-negative")

    def level(self, level):
        if not 0 <= level <= self.max_level - 1:
            raise LevelOutOfRange(f"level {level} outside [0, {self.max_level - 1}]")
        if self.mode == "constant":
            return float(self.epsilon)
        return self.epsilon0 / self.domain_area * 2.0 ** (self.dim * (level - self.max_level + 1))


def threshold_level(policy, level):
    return policy.level(level)


# ---------------------------------------------------------------------------
# mesh

class QuadtreeMesh:
    """Graded quadtree of cell averages over a rectangular domain."""

    def __init__(self, max_level, boundary="neumann", xlim=(-1.0, 1.0), ylim=(-1.0, 1.0)):
        if max_level < 0:
            raise ValueError("max_level must be non-negative")
        if boundary not in ("neumann", "periodic"):
            raise ValueError(f"unknown boundary {boundary!r}")
        self.max_level = max_level
        self.boundary = boundary
        self.xlim = tuple(xlim)
        self.ylim = tuple(ylim)
        self.q = [np.zeros((NVAR, 2 ** l, 2 ** l)) for l in range(max_level + 1)]
        self.exists = [np.zeros((2 ** l, 2 ** l), dtype=bool) for l in range(max_level + 1)]
        self.exists[0][:] = True
        self.fallback_count = 0

    @classmethod
    def full(cls, finest, boundary="neumann", xlim=(-1.0, 1.0), ylim=(-1.0, 1.0)):
        """Complete tree whose finest level holds ``finest`` (shape ``(9, 2**L, 2**L)``)."""
        finest = np.asarray(finest, dtype=float)
        n = finest.shape[-1]
        L = int(round(np.log2(n)))
        if finest.shape != (NVAR, n, n) or 2 ** L != n:
            raise ValueError(f"finest level must be (9, 2**L, 2**L), got {finest.shape}")
        mesh = cls(L, boundary, xlim, ylim)
        mesh.q[L] = finest.copy()
        for l in range(L + 1):
            mesh.exists[l][:] = True
        mesh.refresh()
        return mesh

    def copy(self):
        other = QuadtreeMesh(self.max_level, self.boundary, self.xlim, self.ylim)
        other.q = [a.copy() for a in self.q]
        other.exists = [m.copy() for m in self.exists]
        other.fallback_count = self.fallback_count
        return other

    # geometry
    def dx(self, level):
        return (self.xlim[1] - self.xlim[0]) / 2 ** level

    def dy(self, level):
        return (self.ylim[1] - self.ylim[0]) / 2 ** level

    @property
    def domain_area(self):
        return (self.xlim[1] - self.xlim[0]) * (self.ylim[1] - self.ylim[0])

    # topology
    def has_children(self, level):
        if level >= self.max_level:
            return np.zeros_like(self.exists[level])
        return any_child(self.exists[level + 1])

    def internal(self, level):
        return self.exists[level] & self.has_children(level)

    def leaves(self, level):
        return self.exists[level] & ~self.has_children(level)

    def leaf_masks(self):
        return [self.leaves(l) for l in range(self.max_level + 1)]

    def leaf_count(self):
        return int(sum(m.sum() for m in self.leaf_masks()))

    def finest_level_present(self):
        for l in range(self.max_level, -1, -1):
            if self.exists[l].any():
                return l
        return 0

    def virtual_masks(self):
        """Absent cells face-adjacent to a same-level leaf (flux stand-ins)."""
        out = []
        for l in range(self.max_level + 1):
            leaf = self.leaves(l)
            out.append(dilate(leaf, self.boundary, diagonal=False) & ~self.exists[l])
        return out

    def virtual_count(self):
        return int(sum(m.sum() for m in self.virtual_masks()))

    def leaf_states(self):
        """Leaf values ``(9, N)`` and the matching cell areas ``(N,)``."""
        qs, areas = [], []
        for l, leaf in enumerate(self.leaf_masks()):
            k = int(leaf.sum())
            if k:
                qs.append(self.q[l][:, leaf])
                areas.append(np.full(k, self.dx(l) * self.dy(l)))
        return np.concatenate(qs, axis=1), np.concatenate(areas)

    def is_graded(self):
        """Full audit: tree consistency plus the 3x3 neighbour rule for internal nodes."""
        for l in range(1, self.max_level + 1):
            ex = self.exists[l]
            c00, c10, c01, c11 = children_of(ex)
            if np.any((c00 | c10 | c01 | c11) != (c00 & c10 & c01 & c11)):
                return False
            if np.any(any_child(ex) & ~self.exists[l - 1]):
                return False
        for l in range(self.max_level):
            internal = self.internal(l)
            if np.any(dilate(internal, self.boundary) & ~self.exists[l]):
                return False
        return True

    def ensure_exists(self, level, mask):
        """Create the cells in ``mask`` at ``level`` together with siblings and ancestors."""
        for l in range(level, 0, -1):
            parents = any_child(mask)
            self.exists[l] |= upsample(parents)
            mask = parents

    def spawn_children(self, level, mask):
        if level >= self.max_level:
            if np.any(mask):
                raise MaxLevelReached(f"cannot refine beyond level {self.max_level}")
            return
        self.exists[level + 1] |= upsample(mask & self.exists[level])

    def enforce_gradedness(self):
        for l in range(self.max_level - 1, 0, -1):
            need = dilate(self.internal(l), self.boundary) & ~self.exists[l]
            if need.any():
                self.ensure_exists(l, need)

    # values
    def refresh(self):
        """Project leaves upward, then fill absent cells by prediction."""
        L = self.max_level
        for l in range(L - 1, -1, -1):
            internal = self.internal(l)
            if internal.any():
                self.q[l] = np.where(internal, project(self.q[l + 1]), self.q[l])
        for l in range(1, L + 1):
            absent = ~self.exists[l]
            if absent.any():
                pred = self._admissible_prediction(l)
                self.q[l] = np.where(absent, pred, self.q[l])

    def _admissible_prediction(self, level):
        """Prediction with a zeroth-order fallback for quartets it would make unphysical."""
        parent = self.q[level - 1]
        pred = predict(parent, self.boundary)
        rho = pred[RHO]
        kin = 0.5 * (pred[MX] ** 2 + pred[MY] ** 2 + pred[MZ] ** 2) / np.where(rho > 0, rho, 1.0)
        mag = 0.5 * (pred[BX] ** 2 + pred[BY] ** 2 + pred[BZ] ** 2)
        eint = pred[EN] - kin - mag
        bad = ~((rho > 0.0) & (eint > 0.0)) & ~self.exists[level]
        if bad.any():
            quartet = any_child(bad)
            # only parents that exist (their children may be created or act as virtual cells)
            quartet &= self.exists[level - 1]
            if quartet.any():
                self.fallback_count += int(quartet.sum())
                pred = np.where(upsample(quartet), upsample(parent), pred)
        return pred

    def synthesize(self, level, mode="piecewise"):
        """Uniform ``(9, 2**level, 2**level)`` field from the leaves.

        ``piecewise`` copies each leaf to its descendants (integrals are kept
        exactly); ``predict`` uses the refreshed tree values at ``level``.
        Leaves finer than ``level`` are averaged down.
        """
        if not 0 <= level <= self.max_level:
            raise LevelOutOfRange(f"level {level} outside [0, {self.max_level}]")
        if mode == "predict":
            self.refresh()
            return self.q[level].copy()
        if mode != "piecewise":
            raise ValueError(f"unknown synthesis mode {mode!r}")
        self.refresh()
        out = self.q[0].copy()
        for l in range(1, level + 1):
            out = upsample(out)
            leaf_or_internal = self.exists[l]
            out = np.where(leaf_or_internal, self.q[l], out)
        return out


# ---------------------------------------------------------------------------
# details

@dataclass
class DetailCoefficients:
    """Wavelet details of a refreshed mesh.

    ``residual[l]`` (``l >= 1``): child value minus its prediction, for every
    cell of level ``l``. ``details[l]`` (parent level ``l``): the three
    independent residuals of each quartet, shape ``(9, 3, n, n)``; the fourth
    is minus their sum. ``node_norm[l]``: per parent, the largest normalised
    residual among its children. ``cell_norm[l]``: the same per child cell.
    """

    residual: list
    details: list
    node_norm: list
    cell_norm: list
    scale: np.ndarray


def component_scale(mesh, normalize=True):
    if not normalize:
        return np.ones(NVAR)
    qleaf, _ = mesh.leaf_states()
    s = np.max(np.abs(qleaf), axis=1)
    return np.where(s > 0.0, s, 1.0)


def compute_details(mesh, normalize=True, prediction_boundary=None):
    """Details on every existing quartet; the mesh is refreshed first."""
    mesh.refresh()
    bnd = prediction_boundary or mesh.boundary
    scale = component_scale(mesh, normalize)
    L = mesh.max_level
    residual, details, node_norm, cell_norm = [None], [], [], [None]
    for l in range(1, L + 1):
        res = mesh.q[l] - predict(mesh.q[l - 1], bnd)
        res = np.where(mesh.exists[l], res, 0.0)
        residual.append(res)
        c00, c10, c01, c11 = children_of(res)
        details.append(np.stack([c10, c01, c11], axis=1))
        norm = np.max(np.abs(res) / scale[:, None, None], axis=0)
        cell_norm.append(norm)
        n00, n10, n01, n11 = children_of(norm)
        node_norm.append(np.maximum(np.maximum(n00, n10), np.maximum(n01, n11)))
    details.append(None)
    node_norm.append(np.zeros((2 ** L, 2 ** L)))
    return DetailCoefficients(residual, details, node_norm, cell_norm, scale)


def significant(details, policy, level):
    """Quartets of parent ``level`` whose details reach the threshold."""
    return details.node_norm[level] >= policy.level(level)


def coarsen(mesh, details, policy):
    """Merge insignificant quartets of leaves, finest level first, keeping the tree graded."""
    L = mesh.max_level
    for l in range(L - 1, -1, -1):
        child_internal = mesh.internal(l + 1)
        required = dilate(child_internal, mesh.boundary) & mesh.exists[l + 1]
        removable = (
            mesh.internal(l)
            & ~any_child(child_internal)
            & ~any_child(required)
            & ~significant(details, policy, l)
        )
        if removable.any():
            mesh.exists[l + 1] &= ~upsample(removable)
    return mesh


def refine_for_evolution(mesh, details, policy, margin=0.5):
    """Extend the mesh where features may move during the next step.

    A leaf whose own detail reaches ``margin`` times its threshold gets
    children (up to the finest level); a leaf whose detail reaches the full
    threshold also gets its eight same-level neighbours. Gradedness is then
    restored. New cells take predicted values on the next refresh.
    """
    L = mesh.max_level
    flagged = [np.zeros_like(mesh.exists[0])]
    strong = [np.zeros_like(mesh.exists[0])]
    for l in range(1, L + 1):
        leaf = mesh.leaves(l)
        eps = policy.level(l - 1)
        flagged.append(leaf & (details.cell_norm[l] >= margin * eps))
        strong.append(leaf & (details.cell_norm[l] >= eps))
    for l in range(1, L + 1):
        if l < L and flagged[l].any():
            mesh.spawn_children(l, flagged[l])
        if strong[l].any():
            mesh.ensure_exists(l, dilate(strong[l], mesh.boundary))
    mesh.enforce_gradedness()
    mesh.refresh()
    return mesh


def install_virtual_leaves(mesh):
    """Per-level masks of virtual leaves (values come from the refreshed tree)."""
    mesh.refresh()
    return mesh.virtual_masks()


# ---------------------------------------------------------------------------
# evolution on the leaves

def _face_index(n, boundary):
    k = np.arange(n + 1)
    if boundary == "periodic":
        return (k - 1) % n, k % n
    return np.clip(k - 1, 0, n - 1), np.clip(k, 0, n - 1)


def _sweep_levels_x(qs, leaf, internal, gamma, ch, dt, dxs, boundary):
    """x sweep on all leaves of the (already refreshed) level arrays."""
    L = len(qs) - 1
    out = list(qs)
    finer = None
    for l in range(L, -1, -1):
        q = qs[l]
        n = q.shape[1]
        kl, kr = _face_index(n, boundary)
        leafL, leafR = leaf[l][kl], leaf[l][kr]
        intL, intR = internal[l][kl], internal[l][kr]
        active = (leafL & ~intR) | (leafR & ~intL)
        covered = (leafL & intR) | (leafR & intL)
        F = np.zeros((NVAR, n + 1, n))
        if active.any():
            fk, fj = np.nonzero(active)
            try:
                F[:, fk, fj] = hlld_flux(q[:, kl[fk], fj], q[:, kr[fk], fj], gamma, ch)
            except SolverFailure as exc:
                raise SolverFailure(f"level {l}: {exc}", where=exc.where) from exc
        if covered.any():
            restricted = 0.5 * (finer[:, 0::2, 0::2] + finer[:, 0::2, 1::2])
            F = np.where(covered, restricted, F)
        if leaf[l].any():
            out[l] = np.where(leaf[l], flux_divergence_update(q, F, dt / dxs[l]), q)
        finer = F
    return out


def sweep_leaves(mesh, qs, gamma, ch, dt, axis):
    leaf = mesh.leaf_masks()
    internal = [mesh.internal(l) for l in range(mesh.max_level + 1)]
    if axis == 0:
        dxs = [mesh.dx(l) for l in range(mesh.max_level + 1)]
        return _sweep_levels_x(qs, leaf, internal, gamma, ch, dt, dxs, mesh.boundary)
    dys = [mesh.dy(l) for l in range(mesh.max_level + 1)]
    out = _sweep_levels_x([swap_axes(a) for a in qs], [m.T for m in leaf],
                          [m.T for m in internal], gamma, ch, dt, dys, mesh.boundary)
    return [swap_axes(a) for a in out]


def _refreshed(mesh, qs):
    mesh.q = qs
    mesh.refresh()
    return mesh.q


def mesh_split_step(mesh, qs, dt, ch, params, *, damp=True, advect=True):
    qs = [a.copy() for a in qs]
    if advect:
        qs = sweep_leaves(mesh, _refreshed(mesh, qs), params.gamma, ch, dt, 0)
        qs = sweep_leaves(mesh, _refreshed(mesh, qs), params.gamma, ch, dt, 1)
    if damp:
        f = damping_factor(dt, ch, params.cp2_over_ch)
        for a in qs:
            a[PSI] = a[PSI] * f
    return _refreshed(mesh, qs)


def mesh_rk2_step(mesh, dt, ch, params, *, psi_damp_per_stage=True, advect=True, damp=True):
    """Heun step on the leaves of a fixed topology; mirrors :func:`glmmr.fv.rk2_step`."""
    mesh.refresh()
    q0 = [a.copy() for a in mesh.q]
    stage_damp = damp and psi_damp_per_stage
    s1 = mesh_split_step(mesh, q0, dt, ch, params, damp=stage_damp, advect=advect)
    s2 = mesh_split_step(mesh, s1, dt, ch, params, damp=stage_damp, advect=advect)
    leaf = mesh.leaf_masks()
    out = [np.where(m, heun_average(a, b), a) for a, b, m in zip(q0, s2, leaf)]
    if damp and not psi_damp_per_stage:
        f = damping_factor(dt, ch, params.cp2_over_ch)
        for a in out:
            a[PSI] = a[PSI] * f
    mesh.q = out
    mesh.refresh()
    return mesh


def mesh_dt(mesh, gamma, c_cfl):
    """CFL step from all leaves, measured with the finest present spacing."""
    lf = mesh.finest_level_present()
    qleaf, _ = mesh.leaf_states()
    return signal_dt(qleaf, mesh.dx(lf), mesh.dy(lf), gamma, c_cfl), lf


# ---------------------------------------------------------------------------
# driver

def compression_ratio(leaf_counts, n_full):
    """Time-averaged percentage of adaptive cells relative to ``n_full`` finest cells."""
    counts = np.asarray(leaf_counts, dtype=float)
    if counts.size == 0:
        raise EmptyHistory("no iterations recorded")
    return float(100.0 * counts.sum() / (n_full * counts.size))


@dataclass
class MrStepInfo:
    t: float
    dt: float
    ch: float
    leaf_count: int
    virtual_count: int
    contained: bool | None = None


class MrSolver:
    """Refine, evolve, coarsen."""

    def __init__(self, mesh, policy, params=None, *, psi_damp_per_stage=True,
                 normalize_details=True, refine_margin=0.5, audit=False):
        self.mesh = mesh
        self.policy = policy
        self.params = params or GlmParams()
        self.psi_damp_per_stage = psi_damp_per_stage
        self.normalize_details = normalize_details
        self.refine_margin = refine_margin
        self.audit = audit
        self.leaf_history = []
        self.memory_history = []
        self.contained_history = []

    @classmethod
    def from_finest(cls, finest, policy, params=None, boundary="neumann", **kw):
        """Full tree from finest-level averages, coarsened once."""
        mesh = QuadtreeMesh.full(finest, boundary)
        solver = cls(mesh, policy, params, **kw)
        coarsen(mesh, solver.details(), policy)
        mesh.refresh()
        return solver

    def details(self):
        return compute_details(self.mesh, self.normalize_details)

    @property
    def n_full(self):
        return 4 ** self.mesh.max_level

    def compression(self):
        return compression_ratio(self.leaf_history, self.n_full)

    def _containment(self, dt, ch):
        """Adapt a full-resolution step from the predicted field; is it inside the mesh?"""
        mesh, p, L = self.mesh, self.params, self.mesh.max_level
        if mesh.finest_level_present() < L:
            return None
        mesh.refresh()
        full = rk2_step(mesh.q[L].copy(), dt, ch, mesh.dx(L), mesh.dy(L), p, mesh.boundary,
                        psi_damp_per_stage=self.psi_damp_per_stage)
        adapted = QuadtreeMesh.full(full, mesh.boundary, mesh.xlim, mesh.ylim)
        coarsen(adapted, compute_details(adapted, self.normalize_details), self.policy)
        return all(not np.any(a & ~e) for a, e in zip(adapted.exists, mesh.exists))

    def step(self, controller):
        mesh, p = self.mesh, self.params
        refine_for_evolution(mesh, self.details(), self.policy, self.refine_margin)
        virtual = mesh.virtual_count()
        memory = mesh.leaf_count() + virtual
        dt_raw, lf = mesh_dt(mesh, p.gamma, p.c_cfl)
        ch = compute_ch(mesh.dx(lf), mesh.dy(lf), dt_raw, p.c_cfl)
        dt = controller.clip(dt_raw)
        contained = self._containment(dt, ch) if self.audit else None
        mesh_rk2_step(mesh, dt, ch, p, psi_damp_per_stage=self.psi_damp_per_stage)
        det = self.details()
        coarsen(mesh, det, self.policy)
        mesh.refresh()
        controller.advance(dt)
        leaves = mesh.leaf_count()
        self.leaf_history.append(leaves)
        self.memory_history.append(memory)
        self.contained_history.append(contained)
        return MrStepInfo(controller.t, dt, ch, leaves, virtual, contained)
