import math

import numpy as np
import pytest

from neurd import cfr
from neurd.cfr import (InfoStateTable, average_policy, cfr_iteration, cfr_local_update, counterfactual_values,
                       reach_probabilities, regret_bound, run_cfr)
from neurd.evaluation import nashconv
from neurd.games import TERMINAL, kuhn_game
from neurd.learners import softmax

import oracles


def random_policy(game, rng):
    return [np.where(t.legal_mask, rng.dirichlet(np.ones(game.max_actions), size=len(t)), 0.0)
            for t in game.infostates]


def as_dict(game, policy):
    return {k: tuple(v) for k, v in game.policy_to_dict(policy).items()}


def test_reach_probabilities_kuhn():
    g = kuhn_game()
    rp = reach_probabilities(g, g.uniform_policy())
    assert rp.own[0][0] == 1 and rp.others[0][0] == 1
    deal = g.children[0][0]
    assert rp.own[0][deal] == 1 and rp.others[0][deal] == pytest.approx(1 / 6)
    term = g.player == TERMINAL
    assert rp.full()[term].sum() == pytest.approx(1.0)
    np.testing.assert_allclose(rp.own[0] * rp.others[0], rp.own[1] * rp.others[1])


def test_counterfactual_values_match_enumeration():
    g = kuhn_game()
    rng = np.random.default_rng(0)
    for _ in range(10):
        pol = random_policy(g, rng)
        table = as_dict(g, pol)
        for p in range(2):
            cf = counterfactual_values(g, pol, p)
            brute = oracles.kuhn_counterfactual_q(table, p)
            for s, key in enumerate(g.infostates[p].keys):
                q0, q1, beta = brute[key]
                np.testing.assert_allclose(cf.q[s], [q0, q1], atol=1e-10)
                assert cf.beta[s] == pytest.approx(beta, abs=1e-12)
            np.testing.assert_allclose(cf.v, (pol[p] * cf.q).sum(axis=1), atol=1e-10)


def test_root_values_zero_sum():
    g = kuhn_game()
    pol = random_policy(g, np.random.default_rng(1))
    roots = []
    for p in range(2):
        cf = counterfactual_values(g, pol, p)
        # player p's first decisions: beta-weighted values sum to the root value
        first = [s for s, k in enumerate(g.infostates[p].keys) if len(k.split(":")[1]) == p]
        roots.append(float((cf.beta[first] * cf.v[first]).sum()))
    assert sum(roots) == pytest.approx(0, abs=1e-12)


def test_unreachable_states_are_flagged():
    g = kuhn_game()
    pol = g.uniform_policy()
    pol[0] = pol[0].copy()
    pol[0][:, :] = [1.0, 0.0]  # player 0 never bets: player 1 never sees a bet
    cf = counterfactual_values(g, pol, 1)
    bet_states = [s for s, k in enumerate(g.infostates[1].keys) if k.endswith(":b")]
    assert not cf.reachable[bet_states].any()
    np.testing.assert_array_equal(cf.q[bet_states], 0)
    inc = cfr.local_increment("neurd", cf, pol[1], 1.0)
    np.testing.assert_array_equal(inc[bet_states], 0)


def test_local_update_rules():
    g = kuhn_game()
    pol = random_policy(g, np.random.default_rng(2))
    cf = counterfactual_values(g, pol, 0)
    logits = np.array([0.3, -0.1])
    s = 0
    y_n, p_n = cfr_local_update(logits, cf, s, "neurd", 0.8)
    y_h, p_h = cfr_local_update(logits, cf, s, "hedge", 0.8)
    y_s, _ = cfr_local_update(logits, cf, s, "spg", 0.8)
    np.testing.assert_allclose(p_n, p_h, atol=1e-15)
    np.testing.assert_allclose(y_s - logits, softmax(logits) * (y_n - logits), atol=1e-15)
    # q == v leaves logits alone
    flat = cfr.CounterfactualState(0, np.full((1, 2), 0.4), np.array([0.4]), np.array([1.0]),
                                   np.full((1, 2), 0.4), np.ones((1, 2), dtype=bool))
    np.testing.assert_array_equal(cfr_local_update(logits, flat, 0, "neurd", 1.0)[0], logits)
    with pytest.raises(ValueError):
        cfr_local_update(logits, cf, s, "bogus", 1.0)


def test_zero_step_keeps_uniform():
    g = kuhn_game()
    tables = [InfoStateTable.initial(g, p) for p in range(2)]
    cfr_iteration(g, tables, "neurd", 0.0)
    for t, u in zip(average_policy(tables), g.uniform_policy()):
        np.testing.assert_allclose(t, u)


def test_average_after_one_iteration_is_the_policy():
    g = kuhn_game()
    tables = [InfoStateTable.initial(g, p) for p in range(2)]
    cfr_iteration(g, tables, "neurd", 1.0)
    avg = average_policy(tables)
    for t, a in zip(tables, avg):
        reached = t.reach_mass > 0
        np.testing.assert_allclose(a[reached], t.policy[reached], atol=1e-15)


def test_average_mass_matches_independent_recomputation():
    g = kuhn_game()
    tables = [InfoStateTable.initial(g, p) for p in range(2)]
    mass = [np.zeros(6), np.zeros(6)]
    for _ in range(15):
        for p in range(2):
            joint = [t.policy for t in tables]
            cf = counterfactual_values(g, joint, p)
            tables[p].logits += cfr.local_increment("neurd", cf, tables[p].policy, 0.5)
            tables[p].policy = softmax(tables[p].logits, tables[p].legal_mask)
            joint = [t.policy for t in tables]
            table = as_dict(g, joint)
            for s, key in enumerate(g.infostates[p].keys):
                card, h = key.split(":")
                # own reach of the state: product of own earlier actions in any history of it
                rho = 1.0
                for i, a in enumerate(h):
                    if i % 2 == p:
                        rho *= table[f"{card}:{h[:i]}"][0 if a == "p" else 1]
                mass[p][s] += rho
            cfr._accumulate_average(g, tables, p)
    for p in range(2):
        np.testing.assert_allclose(tables[p].reach_mass, mass[p], atol=1e-10)
        assert np.all(tables[p].avg_weights >= 0)


def test_regret_bound_formula():
    g = kuhn_game()
    assert regret_bound(g, 0, 1) == pytest.approx(6 * 4 * math.sqrt(2 * math.log(2)))
    assert regret_bound(g, 1, 100) == pytest.approx(6 * 4 * math.sqrt(2 * math.log(2) * 100))
    with pytest.raises(ValueError):
        regret_bound(g, 0, 0)


def test_neurd_and_hedge_cfr_agree():
    g = kuhn_game()
    t_n = [InfoStateTable.initial(g, p) for p in range(2)]
    t_h = [InfoStateTable.initial(g, p) for p in range(2)]
    for _ in range(50):
        cfr_iteration(g, t_n, "neurd", 1.0)
        cfr_iteration(g, t_h, "hedge", 1.0)
        for a, b in zip(t_n, t_h):
            np.testing.assert_allclose(a.policy, b.policy, atol=1e-9)


def test_run_cfr_records_and_monotone_trend():
    g = kuhn_game()
    _, records = run_cfr(g, "neurd", 1.0, 1000, eval_every=100)
    assert [r["iter"] for r in records] == list(range(100, 1001, 100))
    nc = [r["nashconv"] for r in records]
    increases = sum(b > a for a, b in zip(nc, nc[1:]))
    assert increases <= max(1, int(0.05 * len(nc)))
    assert all(r["regret_p0"] >= 0 for r in records)
    with pytest.raises(ValueError):
        run_cfr(g, "neurd", 1.0, 0)


def test_accumulation_instant_sensitivity():
    # accumulating the average with the pre-update policy instead converges as well
    g = kuhn_game()
    tables = [InfoStateTable.initial(g, p) for p in range(2)]
    for _ in range(1000):
        for p in range(2):
            cfr._accumulate_average(g, tables, p)
            joint = [t.policy for t in tables]
            cf = counterfactual_values(g, joint, p)
            tables[p].logits += cfr.local_increment("neurd", cf, tables[p].policy, 1.0)
            tables[p].policy = softmax(tables[p].logits, tables[p].legal_mask)
    before = nashconv(g, average_policy(tables)).nashconv
    tables, _ = run_cfr(g, "neurd", 1.0, 1000, eval_every=1000)
    after = nashconv(g, average_policy(tables)).nashconv
    assert before < 0.05 and after < 0.05


def test_phase_column_follows_schedule():
    from neurd.games import RewardSchedule
    g = kuhn_game()
    sched = RewardSchedule.negation(30, 3)
    _, records = run_cfr(g, "neurd", 1.0, 90, eval_every=10, schedule=sched)
    for r in records:
        assert r["phase"] == sched.phase_index(r["iter"] - 1)
