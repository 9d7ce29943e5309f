"""Exact evaluation: expected values, best responses and NashConv.

Policies for matrix games are ``(row_probs, col_probs)``; for extensive-form
games they are one ``(num_infostates, max_actions)`` array per player with
zeros on illegal actions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .games import GameTree, MatrixGame


@dataclass(frozen=True)
class EvalReport:
    br_values: tuple[float, ...]
    expected_values: tuple[float, ...]
    nashconv: float
    policy_kind: str = "current"  # or "sequence-average" / "time-average"

    @property
    def gains(self) -> tuple[float, ...]:
        return tuple(b - e for b, e in zip(self.br_values, self.expected_values))


def expected_value(game, policy) -> np.ndarray:
    """Expected utility of every player under the joint policy."""
    if isinstance(game, MatrixGame):
        row, col = (np.asarray(p, dtype=float) for p in policy)
        v = float(row @ game.row_payoffs @ col)
        return np.array([v, -v])
    edge = game.edge_probs(policy)
    return np.array([game.backup(edge, game.utility[:, k])[0] for k in range(game.num_players)])


def best_response(game, policy, player: int):
    """Best-response value and a pure best response for ``player``.

    Ties go to the lowest legal action index. Information states the
    opponent never reaches are still assigned an action, so the returned
    policy is total.
    """
    if isinstance(game, MatrixGame):
        u = game.action_values(*policy)[player]
        best = int(np.argmax(u))
        pure = np.zeros(len(u))
        pure[best] = 1.0
        return float(u[best]), pure
    return _tree_best_response(game, policy, player)


def _tree_best_response(game: GameTree, policy, k: int):
    edge = game.edge_probs(policy)
    rho_opp = game.reach(np.where(game.parent_player == k, 1.0, edge))
    table = game.infostates[k]
    num_actions = game.max_actions
    pure = np.zeros((len(table), num_actions))
    values = np.where(game.is_terminal, game.utility[:, k], 0.0)

    for d in range(len(game.levels) - 1, 0, -1):
        lvl, up = game.levels[d], game.levels[d - 1]
        weight = edge[lvl].copy()
        mine = game.parent_player[lvl] == k
        if mine.any():
            kids = np.flatnonzero(mine) + lvl.start
            s = game.parent_infostate[kids]
            a = game.action[kids]
            flat = s * num_actions + a
            cf = np.bincount(flat, weights=rho_opp[game.parent[kids]] * values[kids],
                             minlength=len(table) * num_actions).reshape(len(table), num_actions)
            present = np.unique(s)
            scores = np.where(table.legal_mask[present], cf[present], -np.inf)
            choice = np.argmax(scores, axis=1)
            pure[present, choice] = 1.0
            weight[mine] = pure[s, a]
        values[up] += np.bincount(game.parent[lvl] - up.start, weights=weight * values[lvl],
                                  minlength=up.stop - up.start)
    return float(values[0]), pure


def nashconv(game, policy, policy_kind: str = "current") -> EvalReport:
    """Sum over players of the best-response gain against the joint policy."""
    ev = expected_value(game, policy)
    brs = tuple(best_response(game, policy, k)[0] for k in range(2))
    total = sum(b - e for b, e in zip(brs, ev))
    return EvalReport(brs, tuple(float(x) for x in ev), float(total), policy_kind)


def matrix_nashconv(game: MatrixGame, row, col) -> float:
    """NashConv straight from the payoff matrix; ``(A q).max() + (-(p A)).max()``."""
    payoffs = game.row_payoffs
    return float((payoffs @ col).max() + (-(row @ payoffs)).max())
