"""Data model of the structured primal-dual inclusion and its certificates.

For primal blocks ``i`` and dual blocks ``k`` the primal problem is

    s*_i in A_i x_i + C_i x_i + Q_i x_i + R_i x
            + sum_k L_ki^* ((Bm_k + Bc_k + Bl_k) [] (Dm_k + Dc_k + Dl_k))
                           (sum_j L_kj x_j - r_k)

where ``[]`` is the parallel sum. :class:`ProblemSpec` holds every ingredient.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np

from .blockspace import BlockVec, SpaceLayout, StateX
from .operators import (
    CocoerciveOp,
    CouplingOp,
    LinearOp,
    LipMonotoneOp,
    ResolventOp,
    zero_cocoercive,
    zero_inverse,
    zero_lipschitz,
    zero_resolvent,
)

__all__ = [
    "ProblemSpec",
    "ProblemValidationError",
    "KTCandidate",
    "validate",
    "alpha_min",
    "kt_residual",
    "residual_terms",
]


class ProblemValidationError(ValueError):
    """Raised by :meth:`ProblemSpec.check` with the list of violations."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(eq=False)
class ProblemSpec:
    """All operators, linear maps and offsets of one problem instance.

    Operator dictionaries are keyed by block label. Missing ``L[(k, i)]``
    entries are zero maps. Use :meth:`build` to get defaults for omitted
    operators.
    """

    h_layout: SpaceLayout
    g_layout: SpaceLayout
    A: dict[str, ResolventOp]
    C: dict[str, CocoerciveOp]
    Q: dict[str, LipMonotoneOp]
    R: CouplingOp
    Bm: dict[str, ResolventOp]
    Bc: dict[str, CocoerciveOp]
    Bl: dict[str, LipMonotoneOp]
    Dm: dict[str, ResolventOp]
    Dc: dict[str, CocoerciveOp]
    Dl: dict[str, LipMonotoneOp]
    L: dict[tuple[str, str], LinearOp]
    sstar: BlockVec
    r: BlockVec
    name: str = ""
    notes: dict = field(default_factory=dict)

    @classmethod
    def build(cls, h_dims: Mapping[str, int], g_dims: Mapping[str, int], *,
              A=None, C=None, Q=None, R=None, Bm=None, Bc=None, Bl=None,
              Dm=None, Dc=None, Dl=None, L=None, sstar=None, r=None,
              nominal_alpha: float = 1.0, name: str = "") -> "ProblemSpec":
        """Assemble a spec, filling omitted operators with defaults.

        Defaults: ``A_i = 0``, ``Q_i = 0``, ``R = 0``, ``Bm_k = 0``,
        ``Bl_k = Dl_k = 0``, ``Dm_k = {0}^{-1}`` (no parallel sum), and zero
        cocoercive parts carrying the constant ``nominal_alpha``.
        """
        h = SpaceLayout.from_dims(h_dims)
        g = SpaceLayout.from_dims(g_dims)

        def fill(given, make, layout):
            given = dict(given or {})
            for lab, dim in layout.blocks:
                if lab not in given:
                    given[lab] = make(dim)
            return given

        def offset(val, layout):
            if val is None:
                return BlockVec.zeros(layout)
            if isinstance(val, BlockVec):
                return val
            return BlockVec.from_blocks(layout, val)

        Ld = {}
        for key, op in (L or {}).items():
            Ld[key] = op if isinstance(op, LinearOp) else LinearOp(op)
        return cls(
            h_layout=h, g_layout=g,
            A=fill(A, zero_resolvent, h),
            C=fill(C, lambda d: zero_cocoercive(d, nominal_alpha), h),
            Q=fill(Q, zero_lipschitz, h),
            R=R if R is not None else CouplingOp.zero(h),
            Bm=fill(Bm, zero_resolvent, g),
            Bc=fill(Bc, lambda d: zero_cocoercive(d, nominal_alpha), g),
            Bl=fill(Bl, zero_lipschitz, g),
            Dm=fill(Dm, zero_inverse, g),
            Dc=fill(Dc, lambda d: zero_cocoercive(d, nominal_alpha), g),
            Dl=fill(Dl, zero_lipschitz, g),
            L=Ld, sstar=offset(sstar, h), r=offset(r, g), name=name)

    @property
    def I(self) -> tuple[str, ...]:  # noqa: E743
        return self.h_layout.labels

    @property
    def K(self) -> tuple[str, ...]:
        return self.g_layout.labels

    def linear(self, k: str, i: str) -> LinearOp | None:
        return self.L.get((k, i))

    def check(self) -> "ProblemSpec":
        violations = validate(self)
        if violations:
            raise ProblemValidationError(violations)
        return self

    @cached_property
    def L_by_k(self) -> dict[str, list[tuple[str, LinearOp]]]:
        out = {k: [] for k in self.K}
        for i in self.I:
            for k in self.K:
                op = self.L.get((k, i))
                if op is not None:
                    out[k].append((i, op))
        return out

    @cached_property
    def L_by_i(self) -> dict[str, list[tuple[str, LinearOp]]]:
        out = {i: [] for i in self.I}
        for k in self.K:
            for i in self.I:
                op = self.L.get((k, i))
                if op is not None:
                    out[i].append((k, op))
        return out

    def apply_L(self, x_flat: np.ndarray) -> np.ndarray:
        """``(sum_i L_ki x_i)_k`` as a flat dual vector."""
        out = np.zeros(self.g_layout.total_dim)
        for k in self.K:
            sk = self.g_layout.slice(k)
            for i, op in self.L_by_k[k]:
                out[sk] += op.matrix @ x_flat[self.h_layout.slice(i)]
        return out

    def apply_Lt(self, v_flat: np.ndarray) -> np.ndarray:
        """``(sum_k L_ki^* v_k)_i`` as a flat primal vector."""
        out = np.zeros(self.h_layout.total_dim)
        for i in self.I:
            si = self.h_layout.slice(i)
            for k, op in self.L_by_i[i]:
                out[si] += op._matrix_t @ v_flat[self.g_layout.slice(k)]
        return out


def validate(spec: ProblemSpec) -> list[str]:
    """Return every dimensional or constant-range violation (empty if ok)."""
    out = []
    h, g = spec.h_layout, spec.g_layout
    if len(h) == 0:
        out.append("no primal blocks")
    if len(g) == 0:
        out.append("no dual blocks")

    def check_family(name, family, layout, attr=None, strict=False):
        missing = [lab for lab in layout.labels if lab not in family]
        extra = [lab for lab in family if lab not in layout]
        for lab in missing:
            out.append(f"{name}[{lab}] is missing")
        for lab in extra:
            out.append(f"{name}[{lab}] does not name a block")
        for lab in layout.labels:
            op = family.get(lab)
            if op is None:
                continue
            if op.dim != layout.dim(lab):
                out.append(f"{name}[{lab}] has dimension {op.dim}, "
                           f"block has {layout.dim(lab)}")
            if attr is not None:
                val = getattr(op, attr)
                if not np.isfinite(val) and not np.isposinf(val):
                    out.append(f"{name}[{lab}].{attr} = {val} is not a number")
                elif strict and not val > 0:
                    out.append(f"{name}[{lab}].{attr} = {val} must be > 0")
                elif not strict and not (val >= 0 and np.isfinite(val)):
                    out.append(f"{name}[{lab}].{attr} = {val} must be "
                               f"finite and >= 0")

    check_family("A", spec.A, h)
    check_family("C", spec.C, h, "alpha", strict=True)
    check_family("Q", spec.Q, h, "lip")
    check_family("Bm", spec.Bm, g)
    check_family("Bc", spec.Bc, g, "alpha", strict=True)
    check_family("Bl", spec.Bl, g, "lip")
    check_family("Dm", spec.Dm, g)
    check_family("Dc", spec.Dc, g, "alpha", strict=True)
    check_family("Dl", spec.Dl, g, "lip")

    if spec.R.layout != h:
        out.append("R is defined on a different primal layout")
    if not (spec.R.chi >= 0 and np.isfinite(spec.R.chi)):
        out.append(f"R.chi = {spec.R.chi} must be finite and >= 0")

    for (k, i), op in spec.L.items():
        if k not in g or i not in h:
            out.append(f"L[{k},{i}] does not name a (dual, primal) block pair")
            continue
        want = (g.dim(k), h.dim(i))
        if op.matrix.shape != want:
            out.append(f"L[{k},{i}] has shape {op.matrix.shape}, "
                       f"expected {want}")

    if spec.sstar.layout != h:
        out.append("sstar is not laid out on the primal spaces")
    if spec.r.layout != g:
        out.append("r is not laid out on the dual spaces")
    return out


def alpha_min(spec: ProblemSpec) -> float:
    """Smallest cocoercivity constant among all C, Bc and Dc parts."""
    consts = [op.alpha for fam in (spec.C, spec.Bc, spec.Dc)
              for op in fam.values()]
    return float(min(consts))


@dataclass
class KTCandidate:
    """Primal-dual pair ``(x, v*)``, optionally with the split ``(y, z)``."""

    x: BlockVec
    vstar: BlockVec
    y: BlockVec | None = None
    z: BlockVec | None = None

    @classmethod
    def from_state(cls, state: StateX) -> "KTCandidate":
        return cls(state.x.copy(), state.vstar.copy(), state.y.copy(),
                   state.z.copy())


def residual_terms(spec: ProblemSpec, x, y, z, v, gamma: float) -> dict:
    """Per-row resolvent residual norms at the flat point ``(x, y, z, v)``.

    Keys are ``('x', i)``, ``('y', k)``, ``('z', k)`` and ``('v', k)``.
    """
    if not gamma > 0:
        raise ValueError(f"gamma_probe must be positive, got {gamma}")
    h, g = spec.h_layout, spec.g_layout
    Rx = spec.R(x)
    Ltv = spec.apply_Lt(v)
    Lx = spec.apply_L(x)
    terms = {}
    for i in spec.I:
        si = h.slice(i)
        xi = x[si]
        w = spec.sstar.data[si] - Ltv[si] - spec.C[i](xi) - spec.Q[i](xi) - Rx[si]
        terms[("x", i)] = float(np.linalg.norm(
            xi - spec.A[i].resolvent(gamma, xi + gamma * w)))
    for k in spec.K:
        sk = g.slice(k)
        yk, zk, vk = y[sk], z[sk], v[sk]
        terms[("y", k)] = float(np.linalg.norm(yk - spec.Bm[k].resolvent(
            gamma, yk + gamma * (vk - spec.Bc[k](yk) - spec.Bl[k](yk)))))
        terms[("z", k)] = float(np.linalg.norm(zk - spec.Dm[k].resolvent(
            gamma, zk + gamma * (vk - spec.Dc[k](zk) - spec.Dl[k](zk)))))
        terms[("v", k)] = float(np.linalg.norm(
            spec.r.data[sk] + yk + zk - Lx[sk]))
    return terms


def _default_split(spec: ProblemSpec, x, v, gamma):
    # y from one forward-backward step on the B row started at Lx - r;
    # z closes the split y + z = Lx - r.
    g = spec.g_layout
    w = spec.apply_L(x) - spec.r.data
    y = np.empty_like(w)
    for k in spec.K:
        sk = g.slice(k)
        wk, vk = w[sk], v[sk]
        y[sk] = spec.Bm[k].resolvent(
            gamma, wk + gamma * (vk - spec.Bc[k](wk) - spec.Bl[k](wk)))
    return y, w - y


def kt_residual(spec: ProblemSpec, cand: KTCandidate,
                gamma_probe: float = 1.0) -> float:
    """Resolvent fixed-point residual of the Kuhn-Tucker inclusions.

    Vanishes exactly at Kuhn-Tucker points completed by a consistent split
    ``(y, z)``. If the candidate carries no split, ``y`` is one resolvent
    step on the ``B`` row started at ``Lx - r`` and ``z = Lx - r - y``; this
    is exact whenever ``Dm = {0}^{-1}`` but may leave a positive residual for
    genuine parallel sums.
    """
    if not gamma_probe > 0:
        raise ValueError(f"gamma_probe must be positive, got {gamma_probe}")
    x = cand.x.data
    v = cand.vstar.data
    if cand.y is not None and cand.z is not None:
        y, z = cand.y.data, cand.z.data
    else:
        y, z = _default_split(spec, x, v, gamma_probe)
    return float(sum(residual_terms(spec, x, y, z, v, gamma_probe).values()))
