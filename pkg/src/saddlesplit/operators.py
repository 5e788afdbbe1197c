"""Operators entering a structured monotone inclusion.

Set-valued maximally monotone operators are only ever touched through their
resolvents ``J_{gamma A} = (Id + gamma A)^{-1}``. Single-valued operators are
either cocoercive (with constant ``alpha``) or monotone and Lipschitzian
(with constant ``lip``). Every concrete instance built by
:func:`catalog_build` keeps the descriptor it was built from so problems can
be written back to disk.
"""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from .blockspace import SpaceLayout

__all__ = [
    "CatalogError",
    "ResolventOp",
    "CocoerciveOp",
    "LipMonotoneOp",
    "LinearOp",
    "CouplingOp",
    "resolvent",
    "apply_linear",
    "adjoint_apply",
    "catalog_build",
    "zero_resolvent",
    "zero_inverse",
    "zero_cocoercive",
    "zero_lipschitz",
    "spectral_norm",
    "RESOLVENT_KINDS",
    "COCOERCIVE_KINDS",
    "LIPSCHITZ_KINDS",
]


class CatalogError(ValueError):
    """Unknown or ill-formed operator descriptor."""


def spectral_norm(M) -> float:
    """Largest singular value of a dense matrix."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


class ResolventOp:
    """Maximally monotone operator accessed through its resolvent.

    Parameters
    ----------
    dim : int
        Dimension of the underlying space.
    evaluator : callable
        ``evaluator(gamma, x)`` returns ``J_{gamma A} x``.
    kind : str
        Catalog name, informational.
    descriptor : dict, optional
        Serializable description; ``None`` for ad-hoc operators.
    """

    def __init__(self, dim: int, evaluator: Callable, kind: str = "custom",
                 descriptor: dict | None = None):
        self.dim = int(dim)
        self._evaluator = evaluator
        self.kind = kind
        self.descriptor = descriptor

    def resolvent(self, gamma: float, x: np.ndarray) -> np.ndarray:
        if not gamma > 0:
            raise ValueError(f"resolvent parameter must be positive, got {gamma}")
        return self._evaluator(gamma, x)

    def __repr__(self):
        return f"ResolventOp(kind={self.kind!r}, dim={self.dim})"


class CocoerciveOp:
    """Single-valued operator with ``<x-y, Cx-Cy> >= alpha ||Cx-Cy||^2``."""

    def __init__(self, dim: int, alpha: float, evaluator: Callable,
                 kind: str = "custom", descriptor: dict | None = None,
                 is_zero: bool = False):
        self.dim = int(dim)
        self.alpha = float(alpha)
        self._evaluator = evaluator
        self.kind = kind
        self.descriptor = descriptor
        self.is_zero = is_zero

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self._evaluator(x)

    def __repr__(self):
        return f"CocoerciveOp(kind={self.kind!r}, dim={self.dim}, alpha={self.alpha})"


class LipMonotoneOp:
    """Monotone operator with ``||Qx-Qy|| <= lip ||x-y||``."""

    def __init__(self, dim: int, lip: float, evaluator: Callable,
                 kind: str = "custom", descriptor: dict | None = None,
                 is_zero: bool = False):
        self.dim = int(dim)
        self.lip = float(lip)
        self._evaluator = evaluator
        self.kind = kind
        self.descriptor = descriptor
        self.is_zero = is_zero

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self._evaluator(x)

    def __repr__(self):
        return f"LipMonotoneOp(kind={self.kind!r}, dim={self.dim}, lip={self.lip})"


class LinearOp:
    """Dense linear map ``R^in_dim -> R^out_dim``."""

    def __init__(self, matrix):
        matrix = np.array(matrix, dtype=float, ndmin=2)
        if matrix.ndim != 2:
            raise ValueError("linear operator needs a 2-d matrix")
        self.matrix = matrix
        self._matrix_t = np.ascontiguousarray(matrix.T)

    @classmethod
    def identity(cls, n: int) -> "LinearOp":
        return cls(np.eye(n))

    @property
    def in_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def out_dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.in_dim,):
            raise ValueError(
                f"linear operator expects input of dimension {self.in_dim}, "
                f"got shape {x.shape}")
        return self.matrix @ x

    def adjoint_apply(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.out_dim,):
            raise ValueError(
                f"adjoint expects input of dimension {self.out_dim}, "
                f"got shape {v.shape}")
        return self._matrix_t @ v

    def norm(self) -> float:
        return spectral_norm(self.matrix)

    def __repr__(self):
        return f"LinearOp({self.out_dim}x{self.in_dim})"


class CouplingOp:
    """Monotone, ``chi``-Lipschitzian map on the whole primal space.

    The evaluator maps a flat primal vector (ordered as ``layout``) to a flat
    primal vector; its block ``i`` is the component ``R_i``.
    """

    def __init__(self, layout: SpaceLayout, chi: float, evaluator: Callable,
                 kind: str = "custom", descriptor: dict | None = None,
                 is_zero: bool = False):
        self.layout = layout
        self.chi = float(chi)
        self._evaluator = evaluator
        self.kind = kind
        self.descriptor = descriptor
        self.is_zero = is_zero

    @classmethod
    def zero(cls, layout: SpaceLayout) -> "CouplingOp":
        n = layout.total_dim
        return cls(layout, 0.0, lambda x: np.zeros(n), kind="zero_operator",
                   descriptor={"type": "zero_operator"}, is_zero=True)

    @classmethod
    def linear(cls, layout: SpaceLayout, matrix) -> "CouplingOp":
        """Coupling ``x -> M x``; ``M + M^T`` must be positive semidefinite."""
        M = np.array(matrix, dtype=float, ndmin=2)
        n = layout.total_dim
        if M.shape != (n, n):
            raise CatalogError(
                f"coupling matrix must be {n}x{n}, got {M.shape}")
        _require_monotone(M, "linear_coupling")
        return cls(layout, spectral_norm(M), lambda x: M @ x,
                   kind="linear_coupling",
                   descriptor={"type": "linear_coupling", "matrix": M.tolist()})

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self._evaluator(x)

    def __repr__(self):
        return f"CouplingOp(kind={self.kind!r}, chi={self.chi})"


def resolvent(op: ResolventOp, gamma: float, x) -> np.ndarray:
    return op.resolvent(gamma, np.asarray(x, dtype=float))


def apply_linear(L: LinearOp, x) -> np.ndarray:
    return L.apply(x)


def adjoint_apply(L: LinearOp, v) -> np.ndarray:
    return L.adjoint_apply(v)


# -- catalog ----------------------------------------------------------------

def _vec(desc, key, dim=None):
    try:
        val = np.asarray(desc[key], dtype=float).reshape(-1)
    except KeyError:
        raise CatalogError(f"{desc.get('type')!r} needs field {key!r}") from None
    if dim is not None and val.shape[0] != dim:
        raise CatalogError(
            f"field {key!r} has length {val.shape[0]}, expected {dim}")
    return val


def _mat(desc, key):
    try:
        M = np.array(desc[key], dtype=float, ndmin=2)
    except KeyError:
        raise CatalogError(f"{desc.get('type')!r} needs field {key!r}") from None
    if M.ndim != 2:
        raise CatalogError(f"field {key!r} must be a matrix (list of rows)")
    return M


def _dim_of(desc, *candidates):
    if "dim" in desc:
        return int(desc["dim"])
    for key in candidates:
        if key in desc:
            return np.asarray(desc[key], dtype=float).reshape(-1).shape[0]
    raise CatalogError(f"{desc.get('type')!r} needs field 'dim'")


def _require_monotone(M, kind):
    sym = 0.5 * (M + M.T)
    if np.linalg.eigvalsh(sym).min() < -1e-12 * max(1.0, spectral_norm(M)):
        raise CatalogError(f"{kind}: M + M^T is not positive semidefinite")


def _require_psd_symmetric(P, kind):
    if P.shape[0] != P.shape[1]:
        raise CatalogError(f"{kind}: matrix must be square, got {P.shape}")
    if not np.allclose(P, P.T, rtol=0, atol=1e-12 * max(1.0, np.abs(P).max())):
        raise CatalogError(f"{kind}: matrix must be symmetric")
    if P.size and np.linalg.eigvalsh(P).min() < -1e-12 * max(1.0, np.abs(P).max()):
        raise CatalogError(f"{kind}: matrix is indefinite")


def zero_resolvent(dim: int) -> ResolventOp:
    """The zero operator; its resolvent is the identity."""
    return ResolventOp(dim, lambda g, x: np.array(x, dtype=float),
                       kind="zero_operator",
                       descriptor={"type": "zero_operator", "dim": dim})


def zero_inverse(dim: int) -> ResolventOp:
    """``{0}^{-1}``, the normal cone of ``{0}``; its resolvent is 0."""
    return ResolventOp(dim, lambda g, x: np.zeros(dim), kind="zero_inverse",
                       descriptor={"type": "zero_inverse", "dim": dim})


def zero_cocoercive(dim: int, alpha: float = 1.0) -> CocoerciveOp:
    """Zero map carrying a nominal cocoercivity constant."""
    if not alpha > 0:
        raise CatalogError("nominal cocoercivity constant must be positive")
    return CocoerciveOp(dim, alpha, lambda x: np.zeros(dim),
                        kind="zero_operator",
                        descriptor={"type": "zero_operator", "dim": dim,
                                    "alpha": float(alpha)},
                        is_zero=True)


def zero_lipschitz(dim: int) -> LipMonotoneOp:
    return LipMonotoneOp(dim, 0.0, lambda x: np.zeros(dim),
                         kind="zero_operator",
                         descriptor={"type": "zero_operator", "dim": dim},
                         is_zero=True)


def _box(desc):
    dim = _dim_of(desc, "lower", "upper")
    lo = _vec(desc, "lower", dim) if "lower" in desc else np.full(dim, -np.inf)
    hi = _vec(desc, "upper", dim) if "upper" in desc else np.full(dim, np.inf)
    if np.any(lo > hi):
        raise CatalogError("normal_cone_box: empty box (lower > upper)")
    return ResolventOp(dim, lambda g, x: np.clip(x, lo, hi),
                       kind="normal_cone_box", descriptor=desc)


def _affine(desc):
    M = _mat(desc, "M")
    d = _vec(desc, "d", M.shape[0])
    dim = M.shape[1]
    pinv = np.linalg.pinv(M)
    if not np.allclose(M @ (pinv @ d), d, atol=1e-10 * max(1.0, np.abs(d).max())):
        raise CatalogError("normal_cone_affine: {Mx = d} is empty")

    def proj(g, x):
        return x - pinv @ (M @ x - d)

    return ResolventOp(dim, proj, kind="normal_cone_affine", descriptor=desc)


def _halfspace(desc):
    a = _vec(desc, "a")
    b = float(desc.get("b", 0.0))
    nrm2 = float(a @ a)
    if nrm2 == 0.0:
        raise CatalogError("normal_cone_halfspace: normal vector is zero")

    def proj(g, x):
        excess = float(a @ x) - b
        if excess <= 0.0:
            return np.array(x, dtype=float)
        return x - (excess / nrm2) * a

    return ResolventOp(a.shape[0], proj, kind="normal_cone_halfspace",
                       descriptor=desc)


def _l1(desc):
    dim = _dim_of(desc, "weight")
    w = desc.get("weight", 1.0)
    w = np.broadcast_to(np.asarray(w, dtype=float), (dim,)).copy()
    if np.any(w < 0):
        raise CatalogError("subdiff_l1: weights must be nonnegative")

    def soft(g, x):
        return np.sign(x) * np.maximum(np.abs(x) - g * w, 0.0)

    return ResolventOp(dim, soft, kind="subdiff_l1", descriptor=desc)


def _prox_quadratic(desc):
    P = _mat(desc, "P")
    _require_psd_symmetric(P, "prox_quadratic")
    dim = P.shape[0]
    c = _vec(desc, "c", dim) if "c" in desc else np.zeros(dim)
    eye = np.eye(dim)
    cache = {}

    def prox(g, x):
        inv = cache.get(g)
        if inv is None:
            if len(cache) > 64:
                cache.clear()
            inv = cache[g] = np.linalg.inv(eye + g * P)
        return inv @ (x + g * c)

    return ResolventOp(dim, prox, kind="prox_quadratic", descriptor=desc)


def _gradient_quadratic(desc):
    P = _mat(desc, "P")
    _require_psd_symmetric(P, "gradient_quadratic")
    dim = P.shape[0]
    c = _vec(desc, "c", dim) if "c" in desc else np.zeros(dim)
    lmax = float(np.linalg.eigvalsh(P).max()) if dim else 0.0
    if lmax <= 0.0:
        alpha = float(desc.get("alpha", 1.0))
        return CocoerciveOp(dim, alpha, lambda x: P @ x - c,
                            kind="gradient_quadratic", descriptor=desc,
                            is_zero=not np.any(c))
    return CocoerciveOp(dim, 1.0 / lmax, lambda x: P @ x - c,
                        kind="gradient_quadratic", descriptor=desc)


def _affine_monotone(desc):
    M = _mat(desc, "M")
    if M.shape[0] != M.shape[1]:
        raise CatalogError(f"affine_monotone: matrix must be square, got {M.shape}")
    _require_monotone(M, "affine_monotone")
    dim = M.shape[0]
    b = _vec(desc, "b", dim) if "b" in desc else np.zeros(dim)
    return LipMonotoneOp(dim, spectral_norm(M), lambda x: M @ x + b,
                         kind="affine_monotone", descriptor=desc)


def _rotation(desc):
    M = _mat(desc, "M")
    if M.shape[0] != M.shape[1]:
        raise CatalogError(f"rotation_monotone: matrix must be square, got {M.shape}")
    S = 0.5 * (M - M.T)
    return LipMonotoneOp(S.shape[0], spectral_norm(S), lambda x: S @ x,
                         kind="rotation_monotone", descriptor=desc)


RESOLVENT_KINDS = {
    "normal_cone_box": _box,
    "normal_cone_affine": _affine,
    "normal_cone_halfspace": _halfspace,
    "zero_inverse": lambda d: zero_inverse(_dim_of(d)),
    "zero_operator": lambda d: zero_resolvent(_dim_of(d)),
    "subdiff_l1": _l1,
    "prox_quadratic": _prox_quadratic,
}

COCOERCIVE_KINDS = {
    "gradient_quadratic": _gradient_quadratic,
    "zero_operator": lambda d: zero_cocoercive(_dim_of(d),
                                               float(d.get("alpha", 1.0))),
}

LIPSCHITZ_KINDS = {
    "affine_monotone": _affine_monotone,
    "rotation_monotone": _rotation,
    "zero_operator": lambda d: zero_lipschitz(_dim_of(d)),
}

_ROLES = {
    "resolvent": RESOLVENT_KINDS,
    "cocoercive": COCOERCIVE_KINDS,
    "lipschitz": LIPSCHITZ_KINDS,
}


def catalog_build(descriptor: Mapping, role: str | None = None,
                  dim: int | None = None):
    """Build an operator from a descriptor mapping.

    Parameters
    ----------
    descriptor : mapping
        Must contain ``type``; the remaining keys are type-specific
        parameters (vectors as lists, matrices as lists of rows).
    role : {'resolvent', 'cocoercive', 'lipschitz'}, optional
        Required when ``type`` is valid for several roles
        (``zero_operator``).
    dim : int, optional
        Fills in ``dim`` when the descriptor does not carry it.

    Returns
    -------
    ResolventOp or CocoerciveOp or LipMonotoneOp
    """
    desc = dict(descriptor)
    kind = desc.get("type")
    if kind is None:
        raise CatalogError("operator descriptor has no 'type'")
    if dim is not None and "dim" not in desc and kind in (
            "zero_operator", "zero_inverse", "subdiff_l1", "normal_cone_box"):
        desc["dim"] = int(dim)
    if role is not None:
        if role not in _ROLES:
            raise CatalogError(f"unknown operator role {role!r}")
        table = _ROLES[role]
        if kind not in table:
            raise CatalogError(f"unknown {role} operator type {kind!r}")
        op = table[kind](desc)
    else:
        roles = [r for r, table in _ROLES.items() if kind in table]
        if not roles:
            raise CatalogError(f"unknown operator type {kind!r}")
        if len(roles) > 1:
            raise CatalogError(
                f"operator type {kind!r} is ambiguous; pass role= one of {roles}")
        op = _ROLES[roles[0]][kind](desc)
    if dim is not None and op.dim != dim:
        raise CatalogError(
            f"{kind} operator has dimension {op.dim}, expected {dim}")
    return op
