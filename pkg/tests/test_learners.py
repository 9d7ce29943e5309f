import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from neurd import learners
from neurd.learners import (RegretLedger, hedge_update, learner_step, neurd_tabular_update, run_repeated_game,
                            softmax, softmax_jacobian, spg_tabular_update, standard_discrete_rd_update,
                            sweep_step_size)

import oracles

finite = st.floats(-5, 5, allow_nan=False)
vec3 = arrays(np.float64, 3, elements=finite)


def test_softmax_examples():
    np.testing.assert_allclose(softmax([0, 0, 0]), [1 / 3] * 3)
    np.testing.assert_allclose(softmax([math.log(2), 0]), [2 / 3, 1 / 3])
    np.testing.assert_allclose(softmax([1000.0, 0.0]), [1.0, 0.0])  # no overflow
    np.testing.assert_allclose(softmax([1.0, 2.0, 3.0], mask=[True, False, True]),
                               [1 / (1 + math.e ** 2), 0, math.e ** 2 / (1 + math.e ** 2)])


@given(vec3, finite)
def test_softmax_shift_invariant(y, c):
    np.testing.assert_allclose(softmax(y), softmax(y + c), atol=1e-12)


def test_hand_evaluated_updates():
    y = np.array([0.3, -0.2])
    pi = np.array([0.5, 0.5])
    np.testing.assert_allclose(neurd_tabular_update(y, [1, -1], pi, 1.0), y + [1, -1])
    np.testing.assert_allclose(spg_tabular_update(y, [1, -1], pi, 1.0), y + [0.5, -0.5])
    np.testing.assert_allclose(hedge_update(y, [0, 0], 3.0), y)
    np.testing.assert_allclose(softmax(standard_discrete_rd_update([0, 0], [1, 0])),
                               [math.e / (math.e + 1), 1 / (math.e + 1)])


def test_constant_utilities_leave_neurd_unchanged():
    y = np.array([0.1, 0.4, -1.0])
    np.testing.assert_allclose(neurd_tabular_update(y, [2, 2, 2], softmax(y), 0.7), y)


def test_spg_at_vertex_is_stationary():
    y = np.array([800.0, 0.0, 0.0])
    np.testing.assert_allclose(spg_tabular_update(y, [-3.0, 5.0, 1.0], softmax(y), 1.0), y)


@given(vec3, vec3, st.floats(0.01, 3))
def test_spg_is_pi_times_neurd(y, u, eta):
    pi = softmax(y)
    d_neurd = neurd_tabular_update(y, u, pi, eta) - y
    d_spg = spg_tabular_update(y, u, pi, eta) - y
    np.testing.assert_allclose(d_spg, pi * d_neurd, atol=1e-12)


@given(vec3, vec3)
def test_spg_is_softmax_jacobian_transpose(y, u):
    pi = softmax(y)
    np.testing.assert_allclose(spg_tabular_update(y, u, pi, 1.0) - y, softmax_jacobian(pi).T @ u, atol=1e-12)


def test_value_gradient_matches_finite_differences():
    rng = np.random.default_rng(1)
    for _ in range(20):
        y, u = rng.normal(size=4), rng.normal(size=4)
        pi = softmax(y)
        fd = oracles.central_difference(lambda z: softmax(z) @ u, y)
        analytic = pi * (u - pi @ u)
        np.testing.assert_allclose(fd, analytic, rtol=1e-6, atol=1e-9)


def test_rd_equals_neurd_up_to_shift():
    y = np.array([0.2, -0.5, 1.0])
    q = np.array([0.3, 0.9, -0.4])
    a = standard_discrete_rd_update(y, q)
    b = neurd_tabular_update(y, q, softmax(y), 1.0)
    shift = a - b
    np.testing.assert_allclose(shift, shift[0])
    np.testing.assert_allclose(softmax(a), softmax(b), atol=1e-15)


def test_hedge_neurd_rd_policies_agree():
    rng = np.random.default_rng(7)
    eta = 0.3
    ys = {k: np.zeros(3) for k in ("hedge", "neurd", "rd")}
    worst = 0.0
    for _ in range(1000):
        u = rng.uniform(-1, 1, 3)
        pols = {k: softmax(v) for k, v in ys.items()}
        worst = max(worst, np.abs(pols["hedge"] - pols["neurd"]).max(), np.abs(pols["hedge"] - pols["rd"]).max())
        ys["hedge"] = hedge_update(ys["hedge"], u, eta)
        ys["neurd"] = neurd_tabular_update(ys["neurd"], u, pols["neurd"], eta)
        ys["rd"] = standard_discrete_rd_update(ys["rd"], eta * u)
    assert worst <= 1e-9


@settings(max_examples=25)
@given(st.integers(0, 2 ** 31 - 1), st.floats(-3, 3))
def test_round_shift_does_not_change_policies(seed, c):
    rng = np.random.default_rng(seed)
    utils = rng.uniform(-1, 1, (30, 3))
    shifted = utils.copy()
    shifted[rng.integers(30)] += c
    for kind in ("hedge", "neurd", "rd"):
        a = run_repeated_game(kind, 30, 0.5, utilities=utils).policies
        b = run_repeated_game(kind, 30, 0.5, utilities=shifted).policies
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_regret_ledger_matches_brute_force():
    rng = np.random.default_rng(3)
    utils = rng.uniform(-1, 1, (50, 3))
    res = run_repeated_game("spg", 50, 0.4, utilities=utils)
    brute = utils.sum(axis=0) - sum(p @ u for p, u in zip(res.policies, utils))
    np.testing.assert_allclose(res.ledger.regrets, brute, atol=1e-10)
    np.testing.assert_allclose(res.action_regrets[-1], brute, atol=1e-10)
    assert res.regrets[-1] == pytest.approx(brute.max())
    ledger = RegretLedger.zeros(2)
    ledger.record([0.5, 0.5], [1.0, -1.0])
    assert ledger.regret == 1.0 and ledger.rounds == 1


def test_hedge_monotone_dominance():
    res = run_repeated_game("hedge", 20, 1.0, utilities=np.tile([1.0, 0.0], (20, 1)))
    np.testing.assert_allclose(res.logits[-1], [20.0, 0.0])
    assert res.policies[-1][0] > 0.999


def test_trace_subsampling():
    assert len(run_repeated_game("neurd", 1000, 0.1).rounds) == 1000
    res = run_repeated_game("neurd", 1200, 0.1)
    assert len(res.rounds) == 120 and res.rounds[-1] == 1200


def test_sweep_step_size():
    assert sweep_step_size("spg", 50, [0.3]) == (0.3, run_repeated_game("spg", 50, 0.3).ledger.regret)
    with pytest.raises(ValueError):
        sweep_step_size("spg", 50, [])
    # stationary dominance: every eta in the grid ties or improves with size; ties go to the smaller
    utils = np.tile([1.0, 0.0], (40, 1))
    eta, _ = sweep_step_size("hedge", 40, [0.5, 50.0, 100.0], utilities=utils)
    assert eta in (50.0, 100.0)


def test_spg_sweep_prefers_moderate_eta():
    eta, _ = sweep_step_size("spg", 100, learners.ETA_GRID, forfeit=True)
    assert 0.021 <= eta <= 2.1


def test_step_sizes():
    assert learners.hedge_step_size(2, 100) == pytest.approx(math.sqrt(2 * math.log(2) / 100))
    sched = learners.anytime_step_size(3, scale=2.0)
    assert sched(4) == pytest.approx(2 * math.sqrt(2 * math.log(3) / 4))
    with pytest.raises(ValueError):
        learner_step("bogus", np.zeros(2), np.zeros(2), 1.0)


def test_regret_fit():
    slope, intercept = learners.regret_fit([100, 200, 400], [3.0, 5.0, 9.0])
    assert slope == pytest.approx(0.02) and intercept == pytest.approx(1.0)
    with pytest.raises(ValueError):
        learners.regret_fit([100], [1.0])
