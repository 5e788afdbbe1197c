"""Reference solutions computed without the package's solver code."""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.spatial import ConvexHull


def dp1_zero(c=(2.0, 0.6)):
    """Zero ``(x, y, z, v*)`` of the DP1 saddle operator, flat.

    Minimizing ½‖x - c‖² + ½‖x‖² over the box gives x = clip(c / 2); the
    multiplier is v* = B(Lx) = x and the split is y = x, z = 0.
    """
    x = np.clip(np.asarray(c, dtype=float) / 2, 0, 1)
    return np.concatenate([x, x, np.zeros(2), x])


def _affine_parts(op):
    """Matrix and offset of an affine operator from its catalog descriptor."""
    d = op.descriptor
    kind = d["type"]
    n = op.dim
    if kind in ("prox_quadratic", "gradient_quadratic"):
        return np.array(d["P"], float), -np.array(d.get("c", np.zeros(n)), float)
    if kind == "affine_monotone":
        return np.array(d["M"], float), np.array(d.get("b", np.zeros(n)), float)
    if kind == "zero_operator":
        return np.zeros((n, n)), np.zeros(n)
    raise ValueError(kind)


def affine_zero(spec):
    """Zero of the saddle operator for a spec whose operators are all affine.

    Assembles the block linear system row by row and solves it densely.
    """
    h, g = spec.h_layout, spec.g_layout
    nh, ng = h.total_dim, g.total_dim
    N = nh + 3 * ng
    K = np.zeros((N, N))
    rhs = np.zeros(N)
    ys, zs, vs = nh, nh + ng, nh + 2 * ng
    for i in spec.I:
        si = h.slice(i)
        for fam in (spec.A, spec.C, spec.Q):
            M, b = _affine_parts(fam[i])
            K[si, si] += M
            rhs[si] -= b
        rhs[si] += spec.sstar[i]
    if not spec.R.is_zero:
        K[:nh, :nh] += np.array(spec.R.descriptor["matrix"], float)
    for (k, i), op in spec.L.items():
        sk, si = g.slice(k), h.slice(i)
        K[si, vs + sk.start:vs + sk.stop] += op.matrix.T
        K[vs + sk.start:vs + sk.stop, si] -= op.matrix
    for k in spec.K:
        sk = g.slice(k)
        for off, fams in ((ys, (spec.Bm, spec.Bc, spec.Bl)),
                          (zs, (spec.Dm, spec.Dc, spec.Dl))):
            rows = slice(off + sk.start, off + sk.stop)
            for fam in fams:
                M, b = _affine_parts(fam[k])
                K[rows, rows] += M
                rhs[rows] -= b
            K[rows, vs + sk.start:vs + sk.stop] -= np.eye(sk.stop - sk.start)
        vrows = slice(vs + sk.start, vs + sk.stop)
        K[vrows, ys + sk.start:ys + sk.stop] += np.eye(sk.stop - sk.start)
        K[vrows, zs + sk.start:zs + sk.stop] += np.eye(sk.stop - sk.start)
        rhs[vrows] -= spec.r[k]
    return np.linalg.solve(K, rhs)


def inf_conv_closed_form(a=2.0, c=1.5, p=1.0, q=3.0, ell=0.8):
    """Closed form of the one-dimensional infimal-convolution fixture.

    ½p y² inf-conv ½q z² is ½m u² with m = pq/(p+q); minimizing
    ½a(x-c)² + ½m(ell x)² gives x = ac/(a + m ell²). Returns
    ``(x, y, z, v*)``.
    """
    m = p * q / (p + q)
    x = a * c / (a + m * ell ** 2)
    v = m * ell * x
    return x, v / p, v / q, v


def inf_conv_numeric(a=2.0, c=1.5, p=1.0, q=3.0, ell=0.8):
    """Same minimizer from a nested scalar minimization."""

    def infconv(u):
        res = minimize_scalar(lambda y: 0.5 * p * y ** 2
                              + 0.5 * q * (u - y) ** 2,
                              bracket=(-10, 10), tol=1e-14)
        return res.fun

    res = minimize_scalar(lambda x: 0.5 * a * (x - c) ** 2 + infconv(ell * x),
                          bracket=(-10, 10), tol=1e-14)
    return res.x


def _project_polygon(pt, verts):
    """Euclidean projection onto a convex polygon given by ordered vertices."""
    hull = ConvexHull(verts)
    eq = hull.equations
    if np.all(eq[:, :2] @ pt + eq[:, 2] <= 1e-15):
        return pt.copy()
    best, dist = None, np.inf
    cyc = verts[hull.vertices]
    for j in range(len(cyc)):
        p0, p1 = cyc[j], cyc[(j + 1) % len(cyc)]
        d = p1 - p0
        t = np.clip(np.dot(pt - p0, d) / np.dot(d, d), 0.0, 1.0)
        cand = p0 + t * d
        dd = np.linalg.norm(pt - cand)
        if dd < dist:
            best, dist = cand, dd
    return best


def vi2_image_solution(b=(2.3, 2.0), skew=0.3, iters=20000, step=0.5):
    """Solution of the fixture VI by projected fixed-point iteration.

    The feasible set is the Minkowski sum of the segment [(1,0),(0,1)] and
    the triangle {(0,0),(0,1),(1,1)}, i.e. the hull of pairwise vertex sums.
    """
    seg = np.array([[1.0, 0.0], [0.0, 1.0]])
    tri = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    verts = np.array([s + t for s in seg for t in tri])
    b = np.asarray(b, dtype=float)
    J = np.array([[0.0, skew], [-skew, 0.0]])
    y = np.zeros(2)
    for _ in range(iters):
        y = _project_polygon(y - step * (y - b + J @ y), verts)
    return y


def lasso_prox_grad(M, b, tau, iters=100_000):
    """Proximal-gradient iterations at step 1/‖M‖²."""
    step = 1.0 / np.linalg.norm(M, 2) ** 2
    x = np.zeros(M.shape[1])
    for _ in range(iters):
        z = x - step * (M.T @ (M @ x - b))
        x = np.sign(z) * np.maximum(np.abs(z) - step * tau, 0.0)
    return x


def project_two_halfspaces(x0, a1, b1, a2, b2):
    """Projection of x0 onto {<a1,x> <= b1} ∩ {<a2,x> <= b2}.

    Enumerates active sets; returns None when the intersection is empty.
    """
    cands = []
    for active in itertools.chain.from_iterable(
            itertools.combinations(range(2), r) for r in range(3)):
        if len(active) == 0:
            x = x0.copy()
        else:
            A = np.array([[a1, a2][j] for j in active])
            bb = np.array([[b1, b2][j] for j in active])
            G = A @ A.T
            if abs(np.linalg.det(G)) < 1e-14:
                continue
            lam = np.linalg.solve(G, A @ x0 - bb)
            x = x0 - A.T @ lam
        tol = 1e-10 * (1 + np.abs(x).max())
        if a1 @ x <= b1 + tol and a2 @ x <= b2 + tol:
            cands.append(x)
    if not cands:
        return None
    return min(cands, key=lambda x: np.linalg.norm(x - x0))
