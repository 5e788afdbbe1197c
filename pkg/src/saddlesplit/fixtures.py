"""Small problem instances used by the tests, demos and shipped data files.

``dp1``
    Box-constrained quadratic on ``R^2``: ``A = N_[0,1]^2``, ``C x = x - c``,
    ``Bc = Id`` and no parallel sum. Its unique primal solution is
    ``proj_box(c / 2)``.
``dp2``
    Random affine instance with three primal blocks, two dual blocks, and
    every operator slot populated (including genuine parallel sums).
``inf_conv``
    One-dimensional infimal convolution of two quadratics.
``vi2``
    Two-set variational inequality over ``L_1(E_1∩F_1) + L_2(E_2∩F_2)``.
``lasso``
    ``min ½‖Mx - b‖² + tau ‖x‖_1``.
``nonattainment``
    Primal solutions exist but there is no Kuhn-Tucker point.
"""

from __future__ import annotations

import numpy as np

from .frontends import MinSpec, VISpec, min_to_problem, vi_to_problem
from .operators import CouplingOp, LinearOp, catalog_build
from .problem import ProblemSpec

__all__ = ["dp1", "dp2", "inf_conv", "vi2", "lasso", "nonattainment"]


def dp1(c=(2.0, 0.6)) -> ProblemSpec:
    c = np.asarray(c, dtype=float)
    return ProblemSpec.build(
        {"1": 2}, {"1": 2},
        A={"1": catalog_build({"type": "normal_cone_box", "lower": [0, 0],
                               "upper": [1, 1]}, role="resolvent")},
        C={"1": catalog_build({"type": "gradient_quadratic",
                               "P": np.eye(2).tolist(), "c": c.tolist()},
                              role="cocoercive")},
        Bc={"1": catalog_build({"type": "gradient_quadratic",
                                "P": np.eye(2).tolist()}, role="cocoercive")},
        L={("1", "1"): LinearOp.identity(2)}, name="dp1")


def _psd(rng, n, lo=0.2, hi=1.0):
    Qm, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return (Qm * rng.uniform(lo, hi, n)) @ Qm.T


def _monotone(rng, n, scale=0.3):
    S = rng.standard_normal((n, n))
    return scale * (S - S.T) / 2 + 0.5 * scale * _psd(rng, n, 0.0, 1.0)


def _sym(P):
    return ((P + P.T) / 2).tolist()


def dp2(seed: int = 3) -> ProblemSpec:
    """Random affine instance; operator descriptors carry the matrices."""
    rng = np.random.default_rng(seed)
    h_dims = {"1": 2, "2": 3, "3": 2}
    g_dims = {"a": 3, "b": 2}
    nh = sum(h_dims.values())

    def quad(kind, n, role, lo=0.2, hi=1.0):
        P = np.array(_sym(_psd(rng, n, lo, hi)))
        c = rng.standard_normal(n)
        return catalog_build({"type": kind, "P": P.tolist(), "c": c.tolist()},
                             role=role)

    def lip(n):
        M = _monotone(rng, n)
        b = rng.standard_normal(n)
        return catalog_build({"type": "affine_monotone", "M": M.tolist(),
                              "b": b.tolist()}, role="lipschitz")

    A = {i: quad("prox_quadratic", d, "resolvent") for i, d in h_dims.items()}
    C = {i: quad("gradient_quadratic", d, "cocoercive", 0.5, 2.0)
         for i, d in h_dims.items()}
    Q = {i: lip(d) for i, d in h_dims.items()}
    Bm = {k: quad("prox_quadratic", d, "resolvent") for k, d in g_dims.items()}
    Bc = {k: quad("gradient_quadratic", d, "cocoercive", 0.5, 2.0)
          for k, d in g_dims.items()}
    Bl = {k: lip(d) for k, d in g_dims.items()}
    Dm = {k: quad("prox_quadratic", d, "resolvent") for k, d in g_dims.items()}
    Dc = {k: quad("gradient_quadratic", d, "cocoercive", 0.5, 2.0)
          for k, d in g_dims.items()}
    Dl = {k: lip(d) for k, d in g_dims.items()}
    MR = _monotone(rng, nh, 0.2)
    spec = ProblemSpec.build(h_dims, g_dims)
    R = CouplingOp.linear(spec.h_layout, MR)
    L = {}
    for k, dk in g_dims.items():
        for i, di in h_dims.items():
            if (k, i) != ("b", "2"):
                L[(k, i)] = 0.7 * rng.standard_normal((dk, di))
    sstar = {i: rng.standard_normal(d) for i, d in h_dims.items()}
    r = {k: rng.standard_normal(d) for k, d in g_dims.items()}
    spec = ProblemSpec.build(h_dims, g_dims, A=A, C=C, Q=Q, R=R, Bm=Bm,
                             Bc=Bc, Bl=Bl, Dm=Dm, Dc=Dc, Dl=Dl, L=L,
                             sstar=sstar, r=r, name="dp2")
    spec.notes["seed"] = seed
    return spec


def inf_conv(a=2.0, c=1.5, p=1.0, q=3.0, ell=0.8) -> ProblemSpec:
    """``min ½a(x-c)² + (½p|·|² inf-conv ½q|·|²)(ell x)`` on the real line."""
    m = MinSpec(
        h_dims={"x": 1}, g_dims={"k": 1},
        L={("k", "x"): [[ell]]},
        phi={"x": catalog_build({"type": "gradient_quadratic", "P": [[a]],
                                 "c": [a * c]}, role="cocoercive")},
        psi={"k": catalog_build({"type": "gradient_quadratic", "P": [[p]]},
                                role="cocoercive")},
        h={"k": {"type": "prox_quadratic", "P": [[q]]}},
        name="inf_conv")
    return min_to_problem(m)


def vi2(b=(2.3, 2.0), skew=0.3) -> ProblemSpec:
    """VI on ``G = R^2`` with ``B y = y - b + skew * J y``.

    ``E_1 = {x_1 + x_2 = 1}``, ``F_1 = [0, inf)^2``, ``E_2 = {x_1 <= x_2}``,
    ``F_2 = [0, 1]^2`` and ``L_1 = L_2 = Id``.
    """
    vi = VISpec(
        E={"1": {"type": "normal_cone_affine", "M": [[1.0, 1.0]], "d": [1.0]},
           "2": {"type": "normal_cone_halfspace", "a": [1.0, -1.0], "b": 0.0}},
        F={"1": {"type": "normal_cone_box", "lower": [0.0, 0.0]},
           "2": {"type": "normal_cone_box", "lower": [0.0, 0.0],
                 "upper": [1.0, 1.0]}},
        L={"1": np.eye(2), "2": np.eye(2)},
        Bc=catalog_build({"type": "gradient_quadratic",
                          "P": np.eye(2).tolist(), "c": list(b)},
                         role="cocoercive"),
        Bl=catalog_build({"type": "rotation_monotone",
                          "M": [[0.0, skew], [-skew, 0.0]]}, role="lipschitz"),
        name="vi2")
    return vi_to_problem(vi)


def lasso_data(seed: int = 11, m: int = 5, n: int = 3):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((m, n)), rng.standard_normal(m)


def lasso(seed: int = 11, tau: float = 0.1) -> ProblemSpec:
    M, b = lasso_data(seed)
    m, n = M.shape
    spec = MinSpec(
        h_dims={"x": n}, g_dims={"r": m},
        L={("r", "x"): M},
        f={"x": {"type": "subdiff_l1", "dim": n, "weight": tau}},
        g={"r": {"type": "prox_quadratic", "P": np.eye(m).tolist(),
                 "c": b.tolist()}},
        name="lasso")
    return min_to_problem(spec)


def nonattainment() -> ProblemSpec:
    """``0 ∈ B_1(x_1 + x_2) ± B_2(x_1 - x_2)`` with ``B_1 = {0}^{-1}``, ``B_2 = 1``."""
    return ProblemSpec.build(
        {"1": 1, "2": 1}, {"1": 1, "2": 1},
        Bm={"1": catalog_build({"type": "zero_inverse", "dim": 1},
                               role="resolvent")},
        Bl={"2": catalog_build({"type": "affine_monotone", "M": [[0.0]],
                                "b": [1.0]}, role="lipschitz")},
        L={("1", "1"): [[1.0]], ("1", "2"): [[1.0]],
           ("2", "1"): [[1.0]], ("2", "2"): [[-1.0]]},
        name="nonattainment")
