import numpy as np
import pytest

from saddlesplit import fixtures
from saddlesplit.blockspace import StateX
from saddlesplit.operators import ResolventOp
from saddlesplit.problem import KTCandidate, kt_residual
from saddlesplit.schedule import HistoryBuffer, Schedule
from saddlesplit.solver import (
    TRACE_HEADER,
    NumericalError,
    ParameterError,
    StepParams,
    StopRule,
    default_params,
    haugazeau_project,
    run,
    step_strong,
    step_weak,
    xi_select,
)

from oracles import dp1_zero, project_two_halfspaces

DP1_X = np.array([1.0, 0.3])


def state(spec, flat):
    return StateX(spec.h_layout, spec.g_layout, np.asarray(flat, float))


def nx(spec):
    return spec.h_layout.total_dim + 3 * spec.g_layout.total_dim


def records(spec, sched, init, n_iter, variant="weak", params=None):
    out = []

    def cb(n, s, rec, new):
        out.append((s.data.copy(), rec, new.data.copy()))

    run(spec, sched, params, init=init, variant=variant,
        stop=StopRule(tol=1e-300, max_iter=n_iter, record_every=10 ** 9,
                      check_every=10 ** 9), callback=cb)
    return out


# -- xi_select and the Haugazeau step ---------------------------------------

def test_xi_select_branches():
    assert xi_select(2, 4, 1, 2) == (1, 0.5)
    assert xi_select(1, 1, 2, 1) == (0, 2)
    kappa, lam = xi_select(1, 2, 2, 1)
    assert kappa == pytest.approx(2 / 3, abs=1e-15)
    assert lam == pytest.approx(2 / 3, abs=1e-15)


def test_xi_select_errors():
    with pytest.raises(ValueError):
        xi_select(0, 1, 1, 0)
    with pytest.raises(ValueError):
        xi_select(1, 0, 1, 0)


def test_haugazeau_with_anchor_at_current_point(rng):
    for _ in range(20):
        x = rng.standard_normal(5)
        t = rng.standard_normal(5)
        eta = np.dot(x, t) - abs(rng.standard_normal()) - 0.1
        delta = np.dot(x, t) - eta
        out = haugazeau_project(x, x, t, eta)
        assert np.allclose(out, x - delta / np.dot(t, t) * t, atol=1e-14)


def test_haugazeau_planar_example():
    # H = {x1 <= 1} and G = {x1 >= 2} are disjoint; the formula falls in
    # the rho = 0 branch and returns the projection of xn onto H.
    x0, xn, t = np.zeros(2), np.array([2.0, 0.0]), np.array([1.0, 0.0])
    out = haugazeau_project(x0, xn, t, 1.0)
    assert out.tolist() == [1.0, 0.0]
    assert project_two_halfspaces(x0, t, 1.0, x0 - xn,
                                  np.dot(xn, x0 - xn)) is None


def test_haugazeau_matches_qp_oracle(rng):
    done = 0
    worst = 0.0
    while done < 100:
        x0, xn, t = (rng.standard_normal(5) for _ in range(3))
        eta = np.dot(xn, t) - rng.uniform(0.05, 2.0)
        ref = project_two_halfspaces(x0, t, eta, x0 - xn,
                                     np.dot(xn, x0 - xn))
        if ref is None:
            continue
        out = haugazeau_project(x0, xn, t, eta)
        worst = max(worst, np.abs(out - ref).max())
        done += 1
    assert worst <= 1e-10


def test_haugazeau_requires_violation():
    with pytest.raises(ValueError):
        haugazeau_project(np.zeros(2), np.zeros(2), np.ones(2), 1.0)


# -- parameters ---------------------------------------------------------------

def test_default_params_are_admissible():
    for make in (fixtures.dp1, fixtures.dp2, fixtures.vi2, fixtures.lasso):
        spec = make()
        p = default_params(spec)
        assert p.sigma == pytest.approx(1 / (2 * p.alpha))
        b = p.bounds(spec)
        for i in spec.I:
            assert p.eps <= p.gamma_at(i, 0) <= b["gamma"][i]
        for k in spec.K:
            assert p.eps <= p.mu_at(k, 0) <= b["mu"][k]
            assert p.eps <= p.nu_at(k, 0) <= b["nu"][k]
            assert p.eps <= p.sigk_at(k, 0) <= 1 / p.eps
        assert p.eps <= p.lam_at(0) <= 2 - p.eps


def test_sigma_must_exceed_quarter_inverse_alpha():
    spec = fixtures.dp1()
    with pytest.raises(ParameterError):
        default_params(spec, sigma=0.25)


def test_step_size_out_of_range_is_rejected():
    spec = fixtures.dp1()
    p = default_params(spec)
    p.gamma = 10.0
    with pytest.raises(ParameterError, match="gamma"):
        run(spec, Schedule(spec.I, spec.K), p, stop=StopRule(max_iter=3))
    p = default_params(spec)
    p.lam = 2.0
    with pytest.raises(ParameterError, match="lambda"):
        run(spec, Schedule(spec.I, spec.K), p,
            init=state(spec, np.ones(8)), stop=StopRule(max_iter=3))


def test_callable_step_sizes():
    spec = fixtures.dp1()
    p = default_params(spec)
    base = p.gamma["1"]
    p.gamma = lambda i, n: base * (0.5 + 0.5 / (1 + n))
    p.lam = lambda n: 1.0 + 0.5 * np.sin(n)
    rep = run(spec, Schedule(spec.I, spec.K), p,
              stop=StopRule(tol=1e-8, max_iter=20000, record_every=10 ** 6))
    assert rep.converged
    assert np.allclose(rep.state.x.data, DP1_X, atol=1e-6)


def test_nonfinite_values_are_reported():
    spec = fixtures.dp1()
    spec.A["1"] = ResolventOp(2, lambda g, x: np.full(2, np.nan))
    with pytest.raises(NumericalError, match="'1'"):
        run(spec, Schedule(spec.I, spec.K), stop=StopRule(max_iter=2))


# -- single steps -------------------------------------------------------------

def test_step_weak_holds_state_when_delta_nonpositive():
    spec = fixtures.dp1()
    sched = Schedule(spec.I, spec.K)
    hist = HistoryBuffer(0)
    z = dp1_zero()
    hist.push(0, z)
    new, rec = step_weak(spec, sched, default_params(spec), hist, 0)
    assert rec.delta <= 0
    assert np.array_equal(new.data, z)


def test_held_iterations_in_runs_are_exact(rng):
    spec = fixtures.vi2()
    sched = Schedule(spec.I, spec.K, P=2, T=2, policy="random_covering",
                     lag_policy="random", seed=2)
    held = 0
    for old, rec, new in records(spec, sched,
                                 state(spec, rng.standard_normal(nx(spec))),
                                 400):
        if not rec.delta > 0:
            held += 1
            assert np.array_equal(old, new)
    assert held > 0


def test_dp1_synchronous_convergence():
    spec = fixtures.dp1()
    params = default_params(spec, sigma=0.5, lam=1.8)
    rep = run(spec, Schedule(spec.I, spec.K), params,
              stop=StopRule(tol=1e-8, max_iter=5000))
    assert rep.converged and rep.iterations <= 5000
    assert rep.kt_residual < 1e-8


def test_single_steps_are_fejer(rng):
    spec = fixtures.dp1()
    z = dp1_zero()
    params = default_params(spec)
    sched = Schedule(spec.I, spec.K)
    for _ in range(200):
        hist = HistoryBuffer(0)
        x = 4 * rng.standard_normal(8)
        hist.push(0, x)
        new, _ = step_weak(spec, sched, params, hist, 0)
        assert np.linalg.norm(new.data - z) <= np.linalg.norm(x - z) + 1e-12


def test_step_strong_moves_away_from_anchor(rng):
    spec = fixtures.dp1()
    sched = Schedule(spec.I, spec.K)
    params = default_params(spec)
    x0 = state(spec, rng.standard_normal(8))
    hist = HistoryBuffer(0)
    hist.push(0, x0.data)
    prev, d_prev = None, 0.0
    for n in range(50):
        new, prev = step_strong(spec, sched, params, hist, n, prev, x0)
        hist = HistoryBuffer(0)
        hist.push(n + 1, new.data)
        d = np.linalg.norm(new.data - x0.data)
        assert d >= d_prev - 1e-12
        d_prev = d


# -- full runs ----------------------------------------------------------------

def test_dp1_weak_run_solution():
    spec = fixtures.dp1()
    rep = run(spec, Schedule(spec.I, spec.K), stop=StopRule(tol=1e-8))
    assert rep.reason == "tolerance"
    assert np.abs(rep.state.x.data - DP1_X).max() < 1e-6


def test_dp1_asynchronous_run_solution():
    spec = fixtures.dp1()
    sched = Schedule(spec.I, spec.K, P=2, T=3, policy="round_robin",
                     lag_policy="fixed", lag=3)
    rep = run(spec, sched, stop=StopRule(tol=1e-8, max_iter=100_000))
    assert rep.converged
    assert np.abs(rep.state.x.data - DP1_X).max() < 1e-6


def test_nonattainment_hits_cap():
    spec = fixtures.nonattainment()
    rep = run(spec, Schedule(spec.I, spec.K),
              stop=StopRule(tol=1e-8, max_iter=2000, check_every=10,
                            record_every=10))
    assert rep.reason == "iteration cap" and not rep.converged
    assert min(row.kt for row in rep.trace) >= 0.01


def test_strong_run_limit_is_projection_of_anchor(rng):
    spec = fixtures.dp1()
    init = state(spec, rng.standard_normal(8))
    rep = run(spec, Schedule(spec.I, spec.K), init=init, variant="strong",
              stop=StopRule(tol=1e-10, max_iter=20_000, check_every=100,
                            record_every=10 ** 6))
    assert np.abs(rep.state.data - dp1_zero()).max() < 1e-5


def test_trace_shape_and_csv():
    spec = fixtures.dp1()
    rep = run(spec, Schedule(spec.I, spec.K), stop=StopRule(tol=1e-8))
    assert len(rep.trace) == rep.iterations
    lines = rep.trace_csv().splitlines()
    assert lines[0] == ",".join(TRACE_HEADER)
    assert len(lines) == rep.iterations + 1
    first = lines[1].split(",")
    assert first[0] == "0" and first[5] == "1" and first[6] == "1"


def test_strong_trace_records_kappa_and_lambda():
    spec = fixtures.dp1()
    rep = run(spec, Schedule(spec.I, spec.K), variant="strong",
              init=state(spec, np.ones(8)), stop=StopRule(max_iter=5))
    assert all("|" in row.step for row in rep.trace if row.delta > 0)


def test_run_rejects_invalid_problem():
    spec = fixtures.dp1()
    spec.C["1"].alpha = -1.0
    with pytest.raises(ValueError, match="alpha"):
        run(spec, Schedule(spec.I, spec.K))


def test_lagged_reads_catch_up_with_current_iterate():
    spec = fixtures.dp2()
    sched = Schedule(spec.I, spec.K, P=2, T=4, policy="random_covering",
                     lag_policy="random", seed=9)
    hist = []
    gaps = []
    rep = run(spec, sched, stop=StopRule(tol=1e-9, max_iter=50_000,
                                         record_every=10 ** 6),
              callback=lambda n, s, rec, new: (
                  hist.append(s.data.copy()),
                  gaps.append((rec.n, dict(rec.lag_I)))))
    assert rep.converged
    tail = gaps[int(0.9 * len(gaps)):]
    worst = 0.0
    for n, lags in tail:
        for i, m in lags.items():
            sl = spec.h_layout.slice(i)
            worst = max(worst, np.linalg.norm(hist[m][sl] - hist[n][sl]))
    assert worst < 1e-6


def test_converged_state_is_kt_point():
    spec = fixtures.dp2()
    rep = run(spec, Schedule(spec.I, spec.K), stop=StopRule(tol=1e-9))
    assert kt_residual(spec, KTCandidate.from_state(rep.state)) < 1e-9


def test_strong_iterates_stay_within_anchor_distance_of_zero(rng):
    spec = fixtures.dp1()
    z = dp1_zero()
    for _ in range(3):
        x0 = state(spec, 3 * rng.standard_normal(8))
        bound = np.linalg.norm(z - x0.data) + 1e-9
        worst = []
        run(spec, Schedule(spec.I, spec.K), init=x0, variant="strong",
            stop=StopRule(tol=1e-300, max_iter=2000, check_every=10 ** 9,
                          record_every=10 ** 9),
            callback=lambda n, s, rec, new: worst.append(
                np.linalg.norm(new.data - x0.data)))
        assert max(worst) <= bound
