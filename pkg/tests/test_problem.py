import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from saddlesplit import fixtures
from saddlesplit.blockspace import BlockVec
from saddlesplit.operators import CocoerciveOp, LinearOp, zero_cocoercive
from saddlesplit.problem import (
    KTCandidate,
    ProblemSpec,
    ProblemValidationError,
    alpha_min,
    kt_residual,
    validate,
)
from saddlesplit.schedule import Schedule
from saddlesplit.solver import StopRule, run

from oracles import dp1_zero


def dp1_candidate(spec, flat, with_split=True):
    h, g = spec.h_layout, spec.g_layout
    x = BlockVec(h, flat[:2])
    y, z, v = (BlockVec(g, flat[2 + 2 * j:4 + 2 * j]) for j in range(3))
    if with_split:
        return KTCandidate(x, v, y, z)
    return KTCandidate(x, v)


def test_dp1_validates():
    assert validate(fixtures.dp1()) == []
    fixtures.dp1().check()


def test_wrong_L_shape_names_the_pair():
    spec = fixtures.dp1()
    spec.L[("1", "1")] = LinearOp(np.ones((3, 2)))
    problems = validate(spec)
    assert len(problems) == 1
    assert "L[1,1]" in problems[0]
    with pytest.raises(ProblemValidationError) as info:
        spec.check()
    assert info.value.violations == problems


def test_zero_cocoercivity_constant_is_reported():
    spec = fixtures.dp1()
    spec.C["1"] = CocoerciveOp(2, 0.0, lambda x: x)
    problems = validate(spec)
    assert len(problems) == 1
    assert "C[1].alpha" in problems[0]


def test_dimension_and_label_errors():
    spec = fixtures.dp1()
    spec.Bc["1"] = zero_cocoercive(3)
    spec.Dm["zz"] = spec.Dm["1"]
    problems = validate(spec)
    assert any("Bc[1]" in p for p in problems)
    assert any("Dm[zz]" in p for p in problems)


def test_alpha_min_examples():
    spec = ProblemSpec.build(
        {"1": 1}, {"1": 1},
        C={"1": zero_cocoercive(1, 1.0)}, Bc={"1": zero_cocoercive(1, 2.0)},
        Dc={"1": zero_cocoercive(1, 0.5)})
    assert alpha_min(spec) == 0.5
    assert alpha_min(ProblemSpec.build({"1": 1}, {"1": 1})) == 1.0
    assert alpha_min(fixtures.dp1()) == 1.0


def test_kt_residual_vanishes_at_dp1_solution():
    spec = fixtures.dp1()
    zero = dp1_zero()
    assert kt_residual(spec, dp1_candidate(spec, zero)) < 1e-10
    assert kt_residual(spec, dp1_candidate(spec, zero, False)) < 1e-10


def test_kt_residual_at_origin_on_dp1():
    # x-row: ‖proj_box(c)‖ = ‖(1, 0.6)‖; every other row vanishes at 0
    spec = fixtures.dp1()
    res = kt_residual(spec, dp1_candidate(spec, np.zeros(8), False))
    assert res == pytest.approx(np.sqrt(1.36), rel=1e-14)
    assert res > 0.1


@pytest.mark.parametrize("probe", [0.5, 0.1, 3.0])
def test_kt_residual_zero_for_every_probe_at_solution(probe):
    spec = fixtures.dp1()
    cand = dp1_candidate(spec, dp1_zero())
    assert kt_residual(spec, cand, 1.0) < 1e-12
    assert kt_residual(spec, cand, probe) < 1e-12


def test_kt_residual_rejects_bad_probe():
    spec = fixtures.dp1()
    with pytest.raises(ValueError):
        kt_residual(spec, dp1_candidate(spec, dp1_zero()), 0.0)


@given(arrays(float, 8, elements=st.floats(-3, 3)),
       arrays(float, 8, elements=st.floats(-1, 1)))
def test_kt_residual_is_continuous(base, direction):
    spec = fixtures.dp1()
    h = 1e-7
    r0 = kt_residual(spec, dp1_candidate(spec, base))
    r1 = kt_residual(spec, dp1_candidate(spec, base + h * direction))
    # every row is Lipschitz in the candidate with constant at most ~10
    assert abs(r1 - r0) <= 20 * h * (1 + np.abs(direction).max())


def test_solver_limit_is_certified():
    spec = fixtures.dp2()
    rep = run(spec, Schedule(spec.I, spec.K),
              stop=StopRule(tol=1e-9, max_iter=5000, record_every=10 ** 6))
    assert rep.converged
    cand = KTCandidate.from_state(rep.state)
    assert kt_residual(spec, cand) < 1e-9


def test_default_split_is_exact_without_parallel_sum():
    spec = fixtures.lasso()
    rep = run(spec, Schedule(spec.I, spec.K),
              stop=StopRule(tol=1e-10, max_iter=20000, record_every=10 ** 6))
    st_ = rep.state
    full = kt_residual(spec, KTCandidate.from_state(st_))
    bare = kt_residual(spec, KTCandidate(st_.x, st_.vstar))
    assert full < 1e-10 and bare < 1e-8


def test_missing_L_entries_are_zero_maps():
    spec = fixtures.dp2()
    assert ("b", "2") not in spec.L
    v = np.ones(spec.g_layout.total_dim)
    out = spec.apply_Lt(v)
    ref = sum(op.matrix.T @ v[spec.g_layout.slice(k)]
              for (k, i), op in spec.L.items() if i == "2")
    assert np.allclose(out[spec.h_layout.slice("2")], ref)
