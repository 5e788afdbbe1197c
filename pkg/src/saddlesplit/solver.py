"""Asynchronous block-iterative projection solvers for the saddle form.

Each iteration processes the active blocks ``I_n``, ``K_n`` from lagged
iterates, assembles a point ``(p_n, p_n^*)`` of the graph of ``M`` together
with the normal vector ``t_n^*`` of an outer half-space of the zero set, and
then either

* relaxes a projection onto that half-space (``variant='weak'``), or
* projects the anchor ``x_0`` onto the intersection of the half-space with
  the Haugazeau half-space ``{x : <x - x_n, x_0 - x_n> <= 0}``
  (``variant='strong'``), which converges to the projection of ``x_0`` onto
  the zero set.

All state lives in flat arrays laid out as ``[x | y | z | v*]``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .blockspace import LayoutError, StateX
from .problem import KTCandidate, ProblemSpec, alpha_min, kt_residual, validate
from .saddle import GraphPoint, HalfSpaceCut, saddle_residual
from .schedule import HistoryBuffer, Schedule

__all__ = [
    "StepParams",
    "ParameterError",
    "NumericalError",
    "IterationRecord",
    "StopRule",
    "TraceRow",
    "SolveReport",
    "default_params",
    "xi_select",
    "haugazeau_project",
    "step_weak",
    "step_strong",
    "run",
    "TRACE_HEADER",
]

TRACE_HEADER = ("n", "delta", "theta_or_kappa_lambda", "kt_residual",
                "saddle_residual", "active_I", "active_K")

# relative slack on step-size range checks, for values computed as 1/(...)
_RANGE_RTOL = 1e-12


class ParameterError(ValueError):
    """Step sizes or relaxation parameters outside their admissible ranges."""


class NumericalError(ArithmeticError):
    """A non-finite value appeared in a block computation."""


def _lookup(value, label, n):
    if callable(value):
        return float(value(label, n))
    if isinstance(value, dict):
        return float(value[label])
    return float(value)


@dataclass
class StepParams:
    """Step sizes and relaxation parameters.

    ``gamma``, ``mu``, ``nu`` and ``sigk`` are a float, a ``label -> float``
    dict, or a callable ``(label, n) -> float``. ``lam`` is a float or a
    callable ``n -> float``.
    """

    alpha: float
    sigma: float
    eps: float
    gamma: object
    mu: object
    nu: object
    sigk: object = 1.0
    lam: object = 1.8

    def gamma_at(self, i, n):
        return _lookup(self.gamma, i, n)

    def mu_at(self, k, n):
        return _lookup(self.mu, k, n)

    def nu_at(self, k, n):
        return _lookup(self.nu, k, n)

    def sigk_at(self, k, n):
        return _lookup(self.sigk, k, n)

    def lam_at(self, n):
        return float(self.lam(n)) if callable(self.lam) else float(self.lam)

    def bounds(self, spec: ProblemSpec) -> dict:
        """Upper bounds of the step sizes per block."""
        chi, s = spec.R.chi, self.sigma
        return {
            "gamma": {i: 1.0 / (spec.Q[i].lip + chi + s) for i in spec.I},
            "mu": {k: 1.0 / (spec.Bl[k].lip + s) for k in spec.K},
            "nu": {k: 1.0 / (spec.Dl[k].lip + s) for k in spec.K},
        }

    def check_static(self, spec: ProblemSpec):
        if not self.alpha > 0:
            raise ParameterError(f"alpha must be positive, got {self.alpha}")
        if not self.sigma > 1.0 / (4.0 * self.alpha):
            raise ParameterError(
                f"sigma = {self.sigma} must exceed 1/(4 alpha) = "
                f"{1.0 / (4.0 * self.alpha)}")
        chi = spec.R.chi
        worst = max([spec.Q[i].lip + chi for i in spec.I]
                    + [spec.Bl[k].lip for k in spec.K]
                    + [spec.Dl[k].lip for k in spec.K]) + self.sigma
        if not (self.eps > 0 and 1.0 / self.eps > worst):
            raise ParameterError(
                f"eps = {self.eps} must satisfy 0 < eps < {1.0 / worst}")


def default_params(spec: ProblemSpec, sigma: float | None = None,
                   lam: float = 1.8, eps: float | None = None) -> StepParams:
    """Aggressive admissible defaults.

    ``sigma = 1/(2 alpha)``, step sizes at their upper bounds, ``sigma_k = 1``
    and ``lambda = 1.8``. ``eps`` is the largest value below 0.1 compatible
    with these choices.
    """
    alpha = alpha_min(spec)
    if sigma is None:
        sigma = 1.0 / (2.0 * alpha)
    chi = spec.R.chi
    worst = max([spec.Q[i].lip + chi for i in spec.I]
                + [spec.Bl[k].lip for k in spec.K]
                + [spec.Dl[k].lip for k in spec.K])
    if eps is None:
        eps = min(0.1, 0.9 * min(1.0, 1.0 / (worst + sigma)))
    params = StepParams(
        alpha=alpha, sigma=float(sigma), eps=float(eps),
        gamma={i: 1.0 / (spec.Q[i].lip + chi + sigma) for i in spec.I},
        mu={k: 1.0 / (spec.Bl[k].lip + sigma) for k in spec.K},
        nu={k: 1.0 / (spec.Dl[k].lip + sigma) for k in spec.K},
        sigk=1.0, lam=float(lam))
    params.check_static(spec)
    return params


def _in_range(val, lo, hi):
    return lo * (1 - _RANGE_RTOL) <= val <= hi * (1 + _RANGE_RTOL)


class IterationRecord:
    """Block quantities of one iteration, stored as flat arrays.

    Primal arrays (length ``dim H``): ``a``, ``astar``, ``lstar``, ``pstar``,
    ``qx`` (lagged ``x_i`` used) and ``Cqx`` (``C_i`` at it). Dual arrays
    (length ``dim G``): ``b``, ``d``, ``ustar``, ``wstar``, ``estar``,
    ``qstar``, ``tstar``, ``e``, ``qy``, ``qz``, ``Bcq``, ``Dcq``.
    ``xi`` and ``eta`` hold one value per block.
    """

    _PRIMAL = ("a", "astar", "lstar", "pstar", "qx", "Cqx")
    _DUAL = ("b", "d", "ustar", "wstar", "estar", "qstar", "tstar", "e",
             "qy", "qz", "Bcq", "Dcq")

    def __init__(self, spec: ProblemSpec, n: int):
        nh, ng = spec.h_layout.total_dim, spec.g_layout.total_dim
        self.h_layout, self.g_layout = spec.h_layout, spec.g_layout
        self.n = n
        for name in self._PRIMAL:
            setattr(self, name, np.zeros(nh))
        for name in self._DUAL:
            setattr(self, name, np.zeros(ng))
        self.xi = np.zeros(len(spec.I))
        self.eta = np.zeros(len(spec.K))
        self.lag_I = {}
        self.lag_K = {}
        self.active_I = frozenset()
        self.active_K = frozenset()
        self.delta = float("nan")
        self.theta = None
        self.tau = None
        self.varsigma = None
        self.chi = None
        self.kappa = None
        self.lam = None
        self.updated = False

    def carry(self, n: int) -> "IterationRecord":
        new = object.__new__(IterationRecord)
        new.__dict__.update(self.__dict__)
        for name in self._PRIMAL + self._DUAL + ("xi", "eta"):
            setattr(new, name, getattr(self, name).copy())
        new.lag_I, new.lag_K = dict(self.lag_I), dict(self.lag_K)
        new.n = n
        new.delta = float("nan")
        new.theta = new.tau = new.varsigma = new.chi = None
        new.kappa = new.lam = None
        new.updated = False
        return new

    def _state(self, *parts):
        return StateX(self.h_layout, self.g_layout, np.concatenate(parts))

    @property
    def p(self) -> StateX:
        """``p_n = (a, b, d, e*)``."""
        return self._state(self.a, self.b, self.d, self.estar)

    @property
    def q(self) -> StateX:
        """``q_n``: the lagged iterates read by each block, with ``e*``."""
        return self._state(self.qx, self.qy, self.qz, self.estar)

    @property
    def t(self) -> StateX:
        """``t_n^* = (p*, q*, t*, e)``."""
        return self._state(self.pstar, self.qstar, self.tstar, self.e)

    def graph_point(self) -> GraphPoint:
        """``(p_n, t_n^* - C q_n)``, a point of the graph of ``M``."""
        return GraphPoint(self.p, self._state(
            self.pstar - self.Cqx, self.qstar - self.Bcq,
            self.tstar - self.Dcq, self.e))

    def cut(self, alpha: float) -> HalfSpaceCut:
        diff = self.p.data - self.q.data
        t = self.t
        eta = float(np.dot(diff, diff)) / (4 * alpha) + float(
            np.dot(self.p.data, t.data))
        return HalfSpaceCut(t, eta)

    def gaps(self, state: StateX) -> dict:
        """Norms of ``x - a``, ``y - b``, ``z - d`` and ``v* - e*``."""
        return {"x": float(np.linalg.norm(state.x.data - self.a)),
                "y": float(np.linalg.norm(state.y.data - self.b)),
                "z": float(np.linalg.norm(state.z.data - self.d)),
                "v": float(np.linalg.norm(state.vstar.data - self.estar))}


class _Engine:
    """Precomputed slices and the shared block computations."""

    def __init__(self, spec: ProblemSpec, sched: Schedule,
                 params: StepParams):
        if tuple(sched.I) != spec.I or tuple(sched.K) != spec.K:
            raise ValueError("schedule blocks do not match the problem")
        self.spec, self.sched, self.params = spec, sched, params
        h, g = spec.h_layout, spec.g_layout
        self.nh, self.ng = h.total_dim, g.total_dim
        nh, ng = self.nh, self.ng
        self.hs = [(j, i, h.slice(i)) for j, i in enumerate(spec.I)]
        self.gs = [(j, k, g.slice(k)) for j, k in enumerate(spec.K)]
        self.ys = slice(nh, nh + ng)
        self.zs = slice(nh + ng, nh + 2 * ng)
        self.vs = slice(nh + 2 * ng, nh + 3 * ng)
        self.bounds = params.bounds(spec)
        self.sstar = spec.sstar.data
        self.r = spec.r.data
        params.check_static(spec)

    def _fail(self, what, label, n):
        raise NumericalError(f"non-finite {what} in block {label!r} at "
                             f"iteration {n}")

    def _check(self, name, val, lo, hi, label, m):
        if not _in_range(val, lo, hi):
            raise ParameterError(f"{name}[{label}] = {val} at iteration {m} "
                                 f"outside [{lo}, {hi}]")

    def compute(self, history: HistoryBuffer, n: int,
                prev: IterationRecord | None) -> tuple[IterationRecord,
                                                        np.ndarray]:
        spec, sched, prm = self.spec, self.sched, self.params
        eps = prm.eps
        I_n, K_n = sched.blocks_at(n)
        if prev is None:
            if n != 0 and (I_n != frozenset(spec.I)
                           or K_n != frozenset(spec.K)):
                raise ValueError("a previous record is required unless "
                                 "every block is active")
            rec = IterationRecord(spec, n)
        else:
            rec = prev.carry(n)
        rec.active_I, rec.active_K = I_n, K_n
        xn = history.get(n)

        lagged = {}
        R_cache, Lt_cache, L_cache = {}, {}, {}

        def state_at(m):
            if m not in lagged:
                lagged[m] = history.get(m)
            return lagged[m]

        for j, i, si in self.hs:
            if i not in I_n:
                continue
            m = sched.lag_at(("primal", i), n)
            X = state_at(m)
            g = prm.gamma_at(i, m)
            self._check("gamma", g, eps, self.bounds["gamma"][i], i, m)
            if m not in R_cache:
                R_cache[m] = spec.R(X[:self.nh])
                Lt_cache[m] = spec.apply_Lt(X[self.vs])
            xi = X[si]
            Qop = spec.Q[i]
            lstar = Qop(xi) + R_cache[m][si] + Lt_cache[m][si]
            cx = spec.C[i](xi)
            a = spec.A[i].resolvent(g, xi + g * (self.sstar[si] - lstar - cx))
            astar = (xi - a) / g - lstar + Qop(a)
            if not (np.all(np.isfinite(a)) and np.all(np.isfinite(astar))):
                self._fail("primal step", i, n)
            rec.a[si] = a
            rec.astar[si] = astar
            rec.lstar[si] = lstar
            rec.qx[si] = xi
            rec.Cqx[si] = cx
            rec.xi[j] = float(np.dot(a - xi, a - xi))
            rec.lag_I[i] = m

        for j, k, sk in self.gs:
            if k not in K_n:
                continue
            m = sched.lag_at(("dual", k), n)
            X = state_at(m)
            mu, nu, sg = prm.mu_at(k, m), prm.nu_at(k, m), prm.sigk_at(k, m)
            self._check("mu", mu, eps, self.bounds["mu"][k], k, m)
            self._check("nu", nu, eps, self.bounds["nu"][k], k, m)
            self._check("sigma_k", sg, eps, 1.0 / eps, k, m)
            if m not in L_cache:
                L_cache[m] = spec.apply_L(X[:self.nh])
            y = X[self.ys][sk]
            z = X[self.zs][sk]
            v = X[self.vs][sk]
            Bl, Dl = spec.Bl[k], spec.Dl[k]
            u = v - Bl(y)
            w = v - Dl(z)
            cy = spec.Bc[k](y)
            cz = spec.Dc[k](z)
            b = spec.Bm[k].resolvent(mu, y + mu * (u - cy))
            d = spec.Dm[k].resolvent(nu, z + nu * (w - cz))
            estar = sg * (L_cache[m][sk] - y - z - self.r[sk]) + v
            qstar = (y - b) / mu + u + Bl(b) - estar
            tstar = (z - d) / nu + w + Dl(d) - estar
            if not all(np.all(np.isfinite(arr))
                       for arr in (b, d, estar, qstar, tstar)):
                self._fail("dual step", k, n)
            rec.b[sk], rec.d[sk] = b, d
            rec.ustar[sk], rec.wstar[sk] = u, w
            rec.estar[sk] = estar
            rec.qstar[sk], rec.tstar[sk] = qstar, tstar
            rec.qy[sk], rec.qz[sk] = y, z
            rec.Bcq[sk], rec.Dcq[sk] = cy, cz
            rec.eta[j] = float(np.dot(b - y, b - y) + np.dot(d - z, d - z))
            rec.lag_K[k] = m

        rec.e = self.r + rec.b + rec.d - spec.apply_L(rec.a)
        rec.pstar = rec.astar + spec.R(rec.a) + spec.apply_Lt(rec.estar)
        if not (np.all(np.isfinite(rec.e)) and np.all(np.isfinite(rec.pstar))):
            self._fail("cut normal", "*", n)

        tvec = np.concatenate([rec.pstar, rec.qstar, rec.tstar, rec.e])
        pvec = np.concatenate([rec.a, rec.b, rec.d, rec.estar])
        penalty = (float(np.sum(rec.xi)) + float(np.sum(rec.eta))) / (
            4.0 * prm.alpha)
        rec.delta = float(np.dot(xn - pvec, tvec)) - penalty
        return rec, tvec

    def update_weak(self, xn, rec, tvec, n):
        if not rec.delta > 0:
            return xn.copy()
        tau = float(np.dot(tvec, tvec))
        if not tau > 0:
            raise NumericalError(f"positive delta with zero cut normal at "
                                 f"iteration {n}")
        lam = self.params.lam_at(n)
        eps = self.params.eps
        if not _in_range(lam, eps, 2 - eps):
            raise ParameterError(f"lambda = {lam} at iteration {n} outside "
                                 f"[{eps}, {2 - eps}]")
        rec.tau = tau
        rec.lam = lam
        rec.theta = lam * rec.delta / tau
        rec.updated = True
        return xn - rec.theta * tvec

    def update_strong(self, xn, rec, tvec, x0, n):
        if not rec.delta > 0:
            return xn.copy()
        tau = float(np.dot(tvec, tvec))
        if not tau > 0:
            raise NumericalError(f"positive delta with zero cut normal at "
                                 f"iteration {n}")
        diff = x0 - xn
        varsigma = float(np.dot(diff, diff))
        chi = float(np.dot(diff, tvec))
        kappa, lam = xi_select(rec.delta, tau, varsigma, chi)
        rec.tau, rec.varsigma, rec.chi = tau, varsigma, chi
        rec.kappa, rec.lam = kappa, lam
        rec.updated = True
        return (1 - kappa) * x0 + kappa * xn - lam * tvec


def xi_select(delta: float, tau: float, varsigma: float,
              chi: float) -> tuple[float, float]:
    """Branch table giving ``(kappa, lambda)`` of the Haugazeau update.

    With ``rho = tau * varsigma - chi**2``:

    * ``rho == 0``: ``(1, delta / tau)``;
    * ``chi * delta >= rho``: ``(0, (delta + chi) / tau)``;
    * otherwise: ``(1 - chi * delta / rho, varsigma * delta / rho)``.

    ``rho`` is nonnegative by Cauchy-Schwarz; a negative value produced by
    rounding is treated as zero.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    rho = tau * varsigma - chi * chi
    if rho <= 0:
        return 1.0, delta / tau
    if chi * delta >= rho:
        return 0.0, (delta + chi) / tau
    return 1.0 - chi * delta / rho, varsigma * delta / rho


def _flat(v):
    if isinstance(v, StateX):
        return v.data
    return np.asarray(v, dtype=float)


def haugazeau_project(x0, xn, tstar, eta: float):
    """Projection of ``x0`` onto ``H ∩ G``.

    ``H = {x : <x, tstar> <= eta}`` and ``G = {x : <x - xn, x0 - xn> <= 0}``.
    Requires ``xn`` outside ``H``. Returns the same type as ``xn``.
    """
    a0, an, t = _flat(x0), _flat(xn), _flat(tstar)
    if not (a0.shape == an.shape == t.shape):
        raise LayoutError("x0, xn and tstar must have the same shape")
    delta = float(np.dot(an, t)) - float(eta)
    if not delta > 0:
        raise ValueError(f"xn must violate the half-space (delta = {delta})")
    diff = a0 - an
    kappa, lam = xi_select(delta, float(np.dot(t, t)),
                           float(np.dot(diff, diff)), float(np.dot(diff, t)))
    out = (1 - kappa) * a0 + kappa * an - lam * t
    if isinstance(xn, StateX):
        return StateX(xn.h_layout, xn.g_layout, out)
    return out


def _history_from(history, n):
    if isinstance(history, HistoryBuffer):
        return history
    raise TypeError("history must be a HistoryBuffer")


def step_weak(spec: ProblemSpec, sched: Schedule, params: StepParams,
              history: HistoryBuffer, n: int,
              prev: IterationRecord | None = None):
    """One relaxed outer-projection iteration.

    Returns ``(state_{n+1}, record_n)``. The caller pushes the new state into
    ``history``.
    """
    eng = _Engine(spec, sched, params)
    hist = _history_from(history, n)
    rec, tvec = eng.compute(hist, n, prev)
    xn = hist.get(n)
    new = eng.update_weak(xn, rec, tvec, n)
    return StateX(spec.h_layout, spec.g_layout, new), rec


def step_strong(spec: ProblemSpec, sched: Schedule, params: StepParams,
                history: HistoryBuffer, n: int,
                prev: IterationRecord | None, x0: StateX):
    """One Haugazeau-type iteration anchored at ``x0``."""
    eng = _Engine(spec, sched, params)
    hist = _history_from(history, n)
    rec, tvec = eng.compute(hist, n, prev)
    xn = hist.get(n)
    new = eng.update_strong(xn, rec, tvec, x0.data, n)
    return StateX(spec.h_layout, spec.g_layout, new), rec


@dataclass
class StopRule:
    """Termination: residual below ``tol`` or ``max_iter`` iterations.

    ``metric`` is ``'kt'`` or ``'saddle'``. Residuals are evaluated every
    ``check_every`` iterations and on every recorded trace row.
    """

    tol: float = 1e-8
    max_iter: int = 10000
    metric: str = "kt"
    check_every: int = 1
    record_every: int = 1
    gamma_probe: float = 1.0

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.metric not in ("kt", "saddle"):
            raise ValueError(f"metric must be 'kt' or 'saddle', "
                             f"got {self.metric!r}")
        if self.check_every < 1 or self.record_every < 1:
            raise ValueError("check_every and record_every must be >= 1")


@dataclass
class TraceRow:
    n: int
    delta: float
    step: str
    kt: float
    saddle: float
    active_I: tuple
    active_K: tuple


@dataclass
class SolveReport:
    state: StateX
    iterations: int
    reason: str
    trace: list = field(default_factory=list)
    kt_residual: float = float("nan")
    saddle_residual: float = float("nan")
    last_record: IterationRecord | None = None
    variant: str = "weak"

    @property
    def converged(self) -> bool:
        return self.reason == "tolerance"

    def trace_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for row in self.trace:
            writer.writerow([row.n, _fmt(row.delta), row.step, _fmt(row.kt),
                             _fmt(row.saddle), ";".join(row.active_I),
                             ";".join(row.active_K)])
        return buf.getvalue()

    def write_trace(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.trace_csv())


def _fmt(x) -> str:
    if x is None:
        return ""
    return "%.17g" % x


def _residuals(spec, state, probe):
    kt = kt_residual(spec, KTCandidate.from_state(state), probe)
    sad = saddle_residual(spec, state, probe)
    return kt, sad


def run(spec: ProblemSpec, sched: Schedule, params: StepParams | None = None,
        init: StateX | None = None, variant: str = "weak",
        stop: StopRule | None = None,
        callback: Callable | None = None) -> SolveReport:
    """Iterate until the stop rule fires.

    Parameters
    ----------
    spec : ProblemSpec
    sched : Schedule
    params : StepParams, optional
        Defaults to :func:`default_params`.
    init : StateX, optional
        Starting point, also the anchor of the strong variant. Zero if
        omitted.
    variant : {'weak', 'strong'}
    stop : StopRule, optional
    callback : callable, optional
        Called as ``callback(n, state_n, record_n, state_{n+1})`` after each
        iteration. Arrays are live; copy them to keep them.

    Returns
    -------
    SolveReport
        ``reason`` is ``'tolerance'`` or ``'iteration cap'``.
    """
    violations = validate(spec)
    if violations:
        raise ValueError("invalid problem: " + "; ".join(violations))
    if variant not in ("weak", "strong"):
        raise ValueError(f"variant must be 'weak' or 'strong', "
                         f"got {variant!r}")
    params = params if params is not None else default_params(spec)
    stop = stop if stop is not None else StopRule()
    if init is None:
        init = StateX.zeros(spec.h_layout, spec.g_layout)
    elif init.h_layout != spec.h_layout or init.g_layout != spec.g_layout:
        raise LayoutError("initial state does not live on the problem spaces")
    eng = _Engine(spec, sched, params)
    hist = HistoryBuffer(sched.T)
    x0 = init.data.copy()
    hist.push(0, x0)
    h, g = spec.h_layout, spec.g_layout
    order_I, order_K = spec.I, spec.K

    prev = None
    trace = []
    reason = "iteration cap"
    kt = sad = float("nan")
    n = 0
    for n in range(stop.max_iter):
        xn = hist.get(n)
        rec, tvec = eng.compute(hist, n, prev)
        if variant == "weak":
            new = eng.update_weak(xn, rec, tvec, n)
        else:
            new = eng.update_strong(xn, rec, tvec, x0, n)
        if not np.all(np.isfinite(new)):
            raise NumericalError(f"non-finite iterate at iteration {n + 1}")
        if callback is not None:
            callback(n, StateX(h, g, xn), rec, StateX(h, g, new))
        hist.push(n + 1, new)
        prev = rec

        done = n + 1 == stop.max_iter
        record = n % stop.record_every == 0 or done
        check = (n + 1) % stop.check_every == 0 or done
        if record or check:
            kt, sad = _residuals(spec, StateX(h, g, new), stop.gamma_probe)
        hit = check and (kt if stop.metric == "kt" else sad) < stop.tol
        if record or hit:
            if variant == "weak":
                step = "" if rec.theta is None else _fmt(rec.theta)
            else:
                step = ("" if rec.kappa is None
                        else f"{_fmt(rec.kappa)}|{_fmt(rec.lam)}")
            trace.append(TraceRow(
                n, rec.delta, step, kt, sad,
                tuple(i for i in order_I if i in rec.active_I),
                tuple(k for k in order_K if k in rec.active_K)))
        if hit:
            reason = "tolerance"
            break

    final = StateX(h, g, hist.get(hist.latest).copy())
    return SolveReport(state=final, iterations=n + 1, reason=reason,
                       trace=trace, kt_residual=kt, saddle_residual=sad,
                       last_record=prev, variant=variant)
