"""Counterfactual regret minimisation with pluggable local learners.

Every information state runs its own all-actions learner on counterfactual
regrets ``beta_{-i}(pi, s) (q_i(s, a) - v_i(s))``:

* ``neurd`` adds the counterfactual regret to the logits,
* ``hedge`` adds the reach-weighted counterfactual value ``beta * q`` (same
  policies as NeuRD since the two differ by a per-state shift),
* ``spg`` adds the counterfactual regret scaled by the current policy.

Players are updated alternately, counterfactual values being recomputed
for the second player after the first player's update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .evaluation import expected_value, nashconv
from .games import STATIONARY, GameTree, RewardSchedule, apply_schedule
from .learners import softmax

CFR_LEARNERS = ("neurd", "hedge", "spg")
LEDUC_ETA_GRID = (0.5, 0.9, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0)


@dataclass
class ReachProbabilities:
    """Per player ``k``: ``own[k]`` = rho_k(h), ``others[k]`` = rho_{-k}(h) (chance included)."""

    own: list
    others: list

    def full(self) -> np.ndarray:
        return self.own[0] * self.others[0]


def reach_probabilities(game: GameTree, policy) -> ReachProbabilities:
    pairs = game.player_reaches(policy)
    return ReachProbabilities([p[0] for p in pairs], [p[1] for p in pairs])


@dataclass
class CounterfactualState:
    """Counterfactual quantities for every information state of one player."""

    player: int
    q: np.ndarray  # (S, A) counterfactual action values, 0 where unreachable
    v: np.ndarray  # (S,)
    beta: np.ndarray  # (S,) opponent-and-chance reach mass
    cf_values: np.ndarray  # (S, A) beta * q, i.e. sum_h rho_{-i}(h) q_i(h, a)
    legal_mask: np.ndarray

    @property
    def reachable(self) -> np.ndarray:
        return self.beta > 0

    @property
    def regrets(self) -> np.ndarray:
        """Instantaneous counterfactual regrets ``beta (q - v)``; 0 on illegal actions."""
        return np.where(self.legal_mask, self.beta[:, None] * (self.q - self.v[:, None]), 0.0)


def counterfactual_values(game: GameTree, policy, player: int) -> CounterfactualState:
    table = game.infostates[player]
    num_actions = game.max_actions
    edge = game.edge_probs(policy)
    rho_opp = game.reach(np.where(game.parent_player == player, 1.0, edge))
    values = game.backup(edge, game.utility[:, player])

    kids = np.flatnonzero(game.parent_player == player)
    s = game.parent_infostate[kids]
    a = game.action[kids]
    weights = rho_opp[game.parent[kids]]
    cf = np.bincount(s * num_actions + a, weights=weights * values[kids],
                     minlength=len(table) * num_actions).reshape(len(table), num_actions)
    nodes = np.flatnonzero(game.player == player)
    beta = np.bincount(game.infostate[nodes], weights=rho_opp[nodes], minlength=len(table))

    q = np.zeros_like(cf)
    reachable = beta > 0
    q[reachable] = cf[reachable] / beta[reachable, None]
    v = (policy[player] * q).sum(axis=1)
    return CounterfactualState(player, q, v, beta, cf, table.legal_mask)


@dataclass
class InfoStateTable:
    """Learner state for all information states of one player."""

    logits: np.ndarray  # (S, A)
    policy: np.ndarray  # (S, A)
    avg_weights: np.ndarray  # (S, A) sum_t rho_i^{pi_t}(s) pi_t(s)
    reach_mass: np.ndarray  # (S,) sum_t rho_i^{pi_t}(s)
    cum_regret: np.ndarray  # (S, A) sum_t beta (q - v)
    visits: np.ndarray  # (S,) updates applied
    legal_mask: np.ndarray

    @classmethod
    def initial(cls, game: GameTree, player: int) -> "InfoStateTable":
        mask = game.infostates[player].legal_mask
        shape = mask.shape
        return cls(np.zeros(shape), softmax(np.zeros(shape), mask), np.zeros(shape),
                   np.zeros(shape[0]), np.zeros(shape), np.zeros(shape[0], dtype=np.int64), mask)

    def regret(self) -> float:
        """Sum over states of positive cumulative counterfactual regret; bounds the player's regret."""
        best = np.where(self.legal_mask, self.cum_regret, -np.inf).max(axis=1)
        return float(np.clip(best, 0.0, None).sum())


def local_increment(kind: str, cf: CounterfactualState, policy: np.ndarray, eta) -> np.ndarray:
    """Logit increments of every information state of ``cf.player``.

    ``eta`` is a scalar or a per-state array. Unreachable states get 0.
    """
    eta = np.asarray(eta, dtype=float)
    eta = eta[:, None] if eta.ndim == 1 else eta
    if kind == "neurd":
        inc = cf.regrets
    elif kind == "hedge":
        inc = np.where(cf.legal_mask, cf.cf_values, 0.0)
    elif kind == "spg":
        inc = policy * cf.regrets
    else:
        raise ValueError(f"unknown CFR learner {kind!r}; valid: {', '.join(CFR_LEARNERS)}")
    return np.where(cf.reachable[:, None], eta * inc, 0.0)


def cfr_local_update(logits, cf: CounterfactualState, s: int, kind: str, eta: float):
    """Update the logits of a single information state ``s``; returns ``(logits, policy)``."""
    logits = np.asarray(logits, dtype=float)
    mask = cf.legal_mask[s]
    if not cf.reachable[s]:
        return logits.copy(), softmax(logits, mask)
    pi = softmax(logits, mask)
    regret = np.where(mask, cf.beta[s] * (cf.q[s] - cf.v[s]), 0.0)
    if kind == "neurd":
        inc = regret
    elif kind == "hedge":
        inc = np.where(mask, cf.cf_values[s], 0.0)
    elif kind == "spg":
        inc = pi * regret
    else:
        raise ValueError(f"unknown CFR learner {kind!r}")
    new = logits + eta * inc
    return new, softmax(new, mask)


def cfr_iteration(game: GameTree, tables, kind: str, eta) -> None:
    """One alternating iteration, updating ``tables`` in place.

    ``eta`` is a scalar or one per-state array per player.
    """
    for player in range(game.num_players):
        joint = [t.policy for t in tables]
        cf = counterfactual_values(game, joint, player)
        table = tables[player]
        step = eta[player] if isinstance(eta, (list, tuple)) else eta
        table.cum_regret += cf.regrets
        table.logits += local_increment(kind, cf, table.policy, step)
        table.visits += cf.reachable
        table.policy = softmax(table.logits, table.legal_mask)
        _accumulate_average(game, tables, player)


def _accumulate_average(game: GameTree, tables, player: int) -> None:
    joint = [t.policy for t in tables]
    edge = game.edge_probs(joint)
    own = game.reach(np.where(game.parent_player == player, edge, 1.0))
    rho = own[game.representative[player]]
    tables[player].avg_weights += rho[:, None] * tables[player].policy
    tables[player].reach_mass += rho


def average_policy(tables) -> list[np.ndarray]:
    """Sequence-weighted average policy; states with no accumulated mass are uniform."""
    out = []
    for t in tables:
        total = t.avg_weights.sum(axis=1, keepdims=True)
        uniform = t.legal_mask / t.legal_mask.sum(axis=1, keepdims=True)
        safe = np.where(total > 0, total, 1.0)
        out.append(np.where(total > 0, t.avg_weights / safe, uniform))
    return out


def regret_bound(game: GameTree, player: int, T: int) -> float:
    """``|S_i| * Delta_u * sqrt(2 ln|A| T)``."""
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    table = game.infostates[player]
    max_actions = int(table.num_actions.max())
    return len(table) * game.utility_spread() * math.sqrt(2.0 * math.log(max_actions) * T)


def hedge_schedule(game: GameTree, T: int) -> list[np.ndarray]:
    """Per-state constant step ``sqrt(2 ln|A(s)| / T)``."""
    return [np.sqrt(2.0 * np.log(t.num_actions) / T) for t in game.infostates]


def run_cfr(game: GameTree, kind: str, eta, iterations: int, eval_every: int = 10,
            schedule: RewardSchedule = STATIONARY, callback=None):
    """Run alternating CFR and return ``(tables, records)``.

    Records are dicts taken every ``eval_every`` iterations (and at the end)
    with the average-policy NashConv against the current phase's game and
    per-player measured regret vs the regret bound.
    """
    if iterations < 1 or eval_every < 1:
        raise ValueError("iterations and eval_every must be >= 1")
    tables = [InfoStateTable.initial(game, p) for p in range(game.num_players)]
    records = []
    for t in range(1, iterations + 1):
        phase_game = apply_schedule(game, schedule, t - 1)
        cfr_iteration(phase_game, tables, kind, eta)
        if t % eval_every == 0 or t == iterations:
            avg = average_policy(tables)
            report = nashconv(phase_game, avg, "sequence-average")
            rec = {
                "iter": t,
                "phase": schedule.phase_index(t - 1),
                "nashconv": report.nashconv,
                "value_p0": report.expected_values[0],
            }
            for p in range(game.num_players):
                rec[f"regret_p{p}"] = tables[p].regret()
                rec[f"bound_p{p}"] = regret_bound(game, p, t)
            records.append(rec)
            if callback is not None:
                callback(rec)
    return tables, records


def average_root_value(game: GameTree, tables) -> float:
    return float(expected_value(game, average_policy(tables))[0])
