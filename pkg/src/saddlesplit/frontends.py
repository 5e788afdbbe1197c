"""Applications cast as instances of the structured inclusion.

Two front-ends are provided.

Variational inequality over a sum of transformed intersections
    Find ``y`` in ``sum_i L_i(E_i ∩ F_i)`` with
    ``<y - w, Bm y + Bc y + Bl y> <= 0`` for all ``w`` in that set. Each
    primal block gets ``A_i = N_{E_i}``; each set ``F_i`` becomes its own dual
    block with ``L_ii = Id``; one extra dual block carries ``B`` and the maps
    ``L_i``.

Composite multivariate minimization
    Minimize ``Theta(x) + sum_i (f_i + phi_i)(x_i)
    + sum_k ((g_k + psi_k) inf-conv h_k)(sum_j L_kj x_j)`` with
    ``A_i = ∂f_i``, ``C_i = ∇phi_i``, ``R = ∇Theta``, ``Bm_k = ∂g_k``,
    ``Bc_k = ∇psi_k`` and ``Dm_k = ∂h_k``.

Zero cocoercive slots carry a nominal constant so that the global constant
``alpha`` matches the one the application calls for.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .operators import (
    CocoerciveOp,
    CouplingOp,
    LinearOp,
    LipMonotoneOp,
    ResolventOp,
    catalog_build,
    zero_cocoercive,
    zero_inverse,
    zero_lipschitz,
    zero_resolvent,
)
from .problem import ProblemSpec

__all__ = ["VISpec", "MinSpec", "vi_to_problem", "min_to_problem",
           "FrontendError"]


class FrontendError(ValueError):
    pass


def _as_resolvent(obj, dim, where):
    if isinstance(obj, ResolventOp):
        op = obj
    elif isinstance(obj, Mapping):
        try:
            op = catalog_build(obj, role="resolvent", dim=dim)
        except ValueError as exc:
            raise FrontendError(f"{where}: {exc}") from None
    else:
        raise FrontendError(f"{where}: expected a resolvent operator or "
                            f"descriptor, got {type(obj).__name__}")
    if op.dim != dim:
        raise FrontendError(f"{where} has dimension {op.dim}, expected {dim}")
    return op


def _as_linear(obj, where):
    try:
        return obj if isinstance(obj, LinearOp) else LinearOp(obj)
    except ValueError as exc:
        raise FrontendError(f"{where}: {exc}") from None


@dataclass
class VISpec:
    """Variational inequality over ``sum_i L_i(E_i ∩ F_i)``.

    Parameters
    ----------
    E, F : dict
        Per primal label, a resolvent (projection) or set descriptor.
    L : dict
        Per primal label, a linear map into the common space ``G``.
    Bm : ResolventOp
    Bc : CocoerciveOp
    Bl : LipMonotoneOp
    kbar : str
        Label of the extra dual block holding ``B``.
    """

    E: dict
    F: dict
    L: dict
    Bm: ResolventOp | None = None
    Bc: CocoerciveOp | None = None
    Bl: LipMonotoneOp | None = None
    kbar: str = "B"
    name: str = ""

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.L)


def vi_to_problem(vi: VISpec) -> ProblemSpec:
    """Embed a :class:`VISpec` into a :class:`ProblemSpec`.

    ``K = I ∪ {kbar}``; dual block ``k in I`` has ``Bm_k = N_{F_k}`` and
    ``L_kk = Id``; dual block ``kbar`` has ``B`` and ``L_{kbar,i} = L_i``.
    Every ``Dm_k`` is ``{0}^{-1}``. Zero cocoercive slots carry the constant
    of ``Bc``.
    """
    labels = vi.labels
    if not labels:
        raise FrontendError("variational inequality has no blocks")
    if set(vi.E) != set(labels) or set(vi.F) != set(labels):
        raise FrontendError("E, F and L must be given for the same labels")
    if vi.kbar in labels:
        raise FrontendError(f"label {vi.kbar!r} of the extra dual block "
                            f"clashes with a primal label")
    Lmaps = {i: _as_linear(vi.L[i], f"L[{i}]") for i in labels}
    outs = {Lmaps[i].out_dim for i in labels}
    if len(outs) != 1:
        raise FrontendError(f"the maps L_i must share one target space, "
                            f"got dimensions {sorted(outs)}")
    m = outs.pop()
    h_dims = {i: Lmaps[i].in_dim for i in labels}
    g_dims = dict(h_dims)
    g_dims[vi.kbar] = m

    Bm = vi.Bm if vi.Bm is not None else zero_resolvent(m)
    Bc = vi.Bc if vi.Bc is not None else zero_cocoercive(m)
    Bl = vi.Bl if vi.Bl is not None else zero_lipschitz(m)
    for name, op in (("Bm", Bm), ("Bc", Bc), ("Bl", Bl)):
        if op.dim != m:
            raise FrontendError(f"{name} has dimension {op.dim}, expected {m}")
    beta = Bc.alpha

    A = {i: _as_resolvent(vi.E[i], h_dims[i], f"E[{i}]") for i in labels}
    Bm_k = {k: _as_resolvent(vi.F[k], h_dims[k], f"F[{k}]") for k in labels}
    Bm_k[vi.kbar] = Bm
    Bc_k = {k: zero_cocoercive(h_dims[k], beta) for k in labels}
    Bc_k[vi.kbar] = Bc
    Bl_k = {vi.kbar: Bl}
    L = {(i, i): LinearOp.identity(h_dims[i]) for i in labels}
    L.update({(vi.kbar, i): Lmaps[i] for i in labels})
    return ProblemSpec.build(
        h_dims, g_dims, A=A, Bm=Bm_k, Bc=Bc_k, Bl=Bl_k,
        Dm={k: zero_inverse(d) for k, d in g_dims.items()},
        L=L, nominal_alpha=beta, name=vi.name or "vi")


@dataclass
class MinSpec:
    """Composite multivariate minimization problem.

    ``f``, ``g``, ``h`` hold proximable functions as resolvents of their
    subdifferentials. ``phi`` and ``psi`` hold gradients. Omitted entries are
    the zero function (``h`` omitted means ``h = ι_{0}``, so the infimal
    convolution disappears). ``theta`` is the gradient of the coupling term.
    """

    h_dims: dict
    g_dims: dict
    L: dict
    f: dict = field(default_factory=dict)
    phi: dict = field(default_factory=dict)
    g: dict = field(default_factory=dict)
    psi: dict = field(default_factory=dict)
    h: dict = field(default_factory=dict)
    theta: CouplingOp | None = None
    name: str = ""


def min_to_problem(m: MinSpec) -> ProblemSpec:
    """Embed a :class:`MinSpec` into a :class:`ProblemSpec`.

    The algorithm constant is ``alpha = min{alpha_i, beta_k}`` over the
    gradients of ``phi_i`` and ``psi_k`` (1 if there are none); it is also
    the nominal constant of the ``Dc`` slots.
    """
    if not m.h_dims:
        raise FrontendError("minimization problem has no primal blocks")
    if not m.g_dims:
        raise FrontendError("minimization problem has no dual blocks")
    for name, fam, dims in (("f", m.f, m.h_dims), ("phi", m.phi, m.h_dims),
                            ("g", m.g, m.g_dims), ("psi", m.psi, m.g_dims),
                            ("h", m.h, m.g_dims)):
        extra = set(fam) - set(dims)
        if extra:
            raise FrontendError(f"{name} names unknown blocks {sorted(extra)}")
    for name, fam, dims in (("phi", m.phi, m.h_dims), ("psi", m.psi, m.g_dims)):
        for lab, op in fam.items():
            if not isinstance(op, CocoerciveOp):
                raise FrontendError(f"{name}[{lab}] must be a gradient "
                                    f"(cocoercive operator)")
            if op.dim != dims[lab]:
                raise FrontendError(f"{name}[{lab}] has dimension {op.dim}, "
                                    f"expected {dims[lab]}")
    consts = [op.alpha for op in m.phi.values()] + [
        op.alpha for op in m.psi.values()]
    alpha = min(consts) if consts else 1.0

    A = {i: _as_resolvent(m.f[i], d, f"f[{i}]") if i in m.f
         else zero_resolvent(d) for i, d in m.h_dims.items()}
    C = {i: m.phi.get(i, zero_cocoercive(d, alpha))
         for i, d in m.h_dims.items()}
    Bm = {k: _as_resolvent(m.g[k], d, f"g[{k}]") if k in m.g
          else zero_resolvent(d) for k, d in m.g_dims.items()}
    Bc = {k: m.psi.get(k, zero_cocoercive(d, alpha))
          for k, d in m.g_dims.items()}
    Dm = {k: _as_resolvent(m.h[k], d, f"h[{k}]") if k in m.h
          else zero_inverse(d) for k, d in m.g_dims.items()}
    L = {key: _as_linear(op, f"L[{key[0]},{key[1]}]")
         for key, op in m.L.items()}
    return ProblemSpec.build(
        m.h_dims, m.g_dims, A=A, C=C, R=m.theta, Bm=Bm, Bc=Bc, Dm=Dm, L=L,
        nominal_alpha=alpha, name=m.name or "min")
