"""Saddle operator on ``X = H + G + G + G`` and its outer half-spaces.

The saddle operator splits as ``S = M + C`` where ``C`` collects the
cocoercive parts,

    C(x, y, z, v*) = ((C_i x_i)_i, (Bc_k y_k)_k, (Dc_k z_k)_k, 0),

and ``M`` holds everything else. ``M`` is set-valued and is never evaluated
forward; the solver only produces points of its graph from resolvent steps.
Given such a graph point ``(p, p*)`` and any ``q``, every zero ``x`` of ``S``
satisfies ``<x - p, p* + Cq> <= ||p - q||^2 / (4 alpha)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blockspace import LayoutError, StateX
from .problem import ProblemSpec, residual_terms

__all__ = [
    "GraphPoint",
    "HalfSpaceCut",
    "apply_C",
    "apply_C_flat",
    "build_cut",
    "saddle_residual",
]


@dataclass
class GraphPoint:
    """A pair ``(p, p*)`` with ``p* in M p``."""

    p: StateX
    pstar: StateX


@dataclass
class HalfSpaceCut:
    """Half-space ``{s : <s, tstar> <= eta}`` containing every zero of S."""

    tstar: StateX
    eta: float

    def delta_at(self, state: StateX) -> float:
        if not state.same_space(self.tstar):
            raise LayoutError("state and cut live on different spaces")
        return float(np.dot(state.data, self.tstar.data)) - self.eta

    def contains(self, state: StateX, tol: float = 0.0) -> bool:
        return self.delta_at(state) <= tol


def _check_state(spec: ProblemSpec, state: StateX):
    if state.h_layout != spec.h_layout or state.g_layout != spec.g_layout:
        raise LayoutError("state does not live on the problem's spaces")


def apply_C_flat(spec: ProblemSpec, data: np.ndarray) -> np.ndarray:
    """Cocoercive part of the saddle operator on a flat ``[x|y|z|v*]``."""
    h, g = spec.h_layout, spec.g_layout
    nh, ng = h.total_dim, g.total_dim
    out = np.zeros_like(data)
    for i in spec.I:
        op = spec.C[i]
        if not op.is_zero:
            si = h.slice(i)
            out[si] = op(data[si])
    for k in spec.K:
        sk = g.slice(k)
        ys = slice(nh + sk.start, nh + sk.stop)
        zs = slice(nh + ng + sk.start, nh + ng + sk.stop)
        if not spec.Bc[k].is_zero:
            out[ys] = spec.Bc[k](data[ys])
        if not spec.Dc[k].is_zero:
            out[zs] = spec.Dc[k](data[zs])
    return out


def apply_C(spec: ProblemSpec, state: StateX) -> StateX:
    """Return ``((C_i x_i), (Bc_k y_k), (Dc_k z_k), 0)``."""
    _check_state(spec, state)
    return StateX(spec.h_layout, spec.g_layout,
                  apply_C_flat(spec, state.data))


def build_cut(spec: ProblemSpec, gp: GraphPoint, q: StateX,
              alpha: float) -> HalfSpaceCut:
    """Outer half-space from a graph point of M and a point ``q``.

    ``tstar = p* + Cq`` and ``eta = ||p - q||^2 / (4 alpha) + <p, tstar>``.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    for s in (gp.p, gp.pstar, q):
        _check_state(spec, s)
    tstar = gp.pstar.data + apply_C_flat(spec, q.data)
    diff = gp.p.data - q.data
    eta = float(np.dot(diff, diff)) / (4.0 * alpha) + float(
        np.dot(gp.p.data, tstar))
    return HalfSpaceCut(StateX(spec.h_layout, spec.g_layout, tstar), eta)


def saddle_residual(spec: ProblemSpec, state: StateX,
                    gamma_probe: float = 1.0) -> float:
    """Resolvent fixed-point residual of ``0 in S(x, y, z, v*)``.

    Sums, over blocks, the distance between each of ``x_i``, ``y_k``,
    ``z_k`` and its forward-backward image, plus ``||r + y + z - Lx||``.
    It vanishes exactly at zeros of ``S``.
    """
    _check_state(spec, state)
    terms = residual_terms(spec, state.x.data, state.y.data, state.z.data,
                           state.vstar.data, gamma_probe)
    return float(sum(terms.values()))
