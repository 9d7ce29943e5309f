"""Single-state, all-actions tabular learners: Hedge, NeuRD, softmax policy
gradient (SPG) and the standard discrete-time replicator dynamic.

All learners keep a logit vector ``y`` and play ``softmax(y)``. They differ
only in how a round's utility vector moves the logits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .games import matching_pennies_utilities

LEARNERS = ("hedge", "neurd", "spg", "rd")

ETA_GRID = (0.01, 0.02, 0.05, 0.1, 0.21, 0.5, 1.0, 2.0, 5.0, 10.0)


def softmax(y, mask=None) -> np.ndarray:
    """Softmax over the last axis; entries outside ``mask`` get probability 0."""
    y = np.asarray(y, dtype=float)
    if mask is not None:
        y = np.where(mask, y, -np.inf)
    z = np.exp(y - y.max(axis=-1, keepdims=True))
    return z / z.sum(axis=-1, keepdims=True)


def hedge_update(y, u, eta: float) -> np.ndarray:
    return np.asarray(y, dtype=float) + eta * np.asarray(u, dtype=float)


def neurd_tabular_update(y, u, pi, eta: float) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return np.asarray(y, dtype=float) + eta * (u - np.dot(pi, u))


def spg_tabular_update(y, u, pi, eta: float) -> np.ndarray:
    """Logit step of all-actions softmax policy gradient: the NeuRD step scaled by ``pi``."""
    u = np.asarray(u, dtype=float)
    pi = np.asarray(pi, dtype=float)
    return np.asarray(y, dtype=float) + eta * pi * (u - np.dot(pi, u))


def standard_discrete_rd_update(y, q) -> np.ndarray:
    """``pi'(a) ∝ pi(a) exp(q(a))`` expressed on the logits."""
    return np.asarray(y, dtype=float) + np.asarray(q, dtype=float)


def softmax_jacobian(pi) -> np.ndarray:
    """``J[a, b] = d pi(a) / d y(b) = pi(a) (delta_ab - pi(b))``."""
    pi = np.asarray(pi, dtype=float)
    return np.diag(pi) - np.outer(pi, pi)


def learner_step(kind: str, y, u, eta: float) -> np.ndarray:
    pi = softmax(y)
    if kind == "hedge":
        return hedge_update(y, u, eta)
    if kind == "neurd":
        return neurd_tabular_update(y, u, pi, eta)
    if kind == "spg":
        return spg_tabular_update(y, u, pi, eta)
    if kind == "rd":
        return standard_discrete_rd_update(y, eta * np.asarray(u, dtype=float))
    raise ValueError(f"unknown learner {kind!r}; valid: {', '.join(LEARNERS)}")


def hedge_step_size(num_actions: int, horizon: int) -> float:
    """Constant step ``sqrt(2 ln|A| / T)`` for a known horizon."""
    return math.sqrt(2.0 * math.log(num_actions) / horizon)


def anytime_step_size(num_actions: int, scale: float = 1.0) -> Callable[[int], float]:
    """``eta_t = scale * sqrt(2 ln|A| / t)`` for rounds ``t = 1, 2, ...``."""
    return lambda t: scale * math.sqrt(2.0 * math.log(num_actions) / t)


@dataclass
class RegretLedger:
    """Running sums for ``R_T(a) = sum_t u_t(a) - pi_t . u_t``."""

    cum_utility_per_action: np.ndarray
    cum_expected_utility: float = 0.0
    rounds: int = 0

    @classmethod
    def zeros(cls, num_actions: int) -> "RegretLedger":
        return cls(np.zeros(num_actions))

    def record(self, pi, u) -> None:
        u = np.asarray(u, dtype=float)
        self.cum_utility_per_action = self.cum_utility_per_action + u
        self.cum_expected_utility += float(np.dot(pi, u))
        self.rounds += 1

    @property
    def regrets(self) -> np.ndarray:
        return self.cum_utility_per_action - self.cum_expected_utility

    @property
    def regret(self) -> float:
        """Regret against the best fixed action in hindsight."""
        return float(self.regrets.max())


@dataclass
class RepeatedGameResult:
    learner: str
    eta: object
    forfeit: bool
    ledger: RegretLedger
    rounds: np.ndarray  # recorded round numbers (1-based)
    logits: np.ndarray  # logits after the recorded round
    policies: np.ndarray  # policy played in the recorded round
    regrets: np.ndarray  # max regret after the recorded round
    action_regrets: np.ndarray  # per-action regret after the recorded round
    extra: dict = field(default_factory=dict)


def run_repeated_game(kind: str, T: int, eta, forfeit: bool = False,
                      utilities: np.ndarray | None = None) -> RepeatedGameResult:
    """Play the all-actions repeated game against a scripted utility sequence.

    ``eta`` is a constant or a callable ``t -> eta_t``. By default the
    utilities are the matching-pennies sequence of the "even" player.
    Traces hold every round for ``T <= 1000`` and every tenth round beyond.
    """
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if utilities is None:
        utilities = matching_pennies_utilities(T, forfeit)
    utilities = np.asarray(utilities, dtype=float)
    step = eta if callable(eta) else (lambda t: eta)
    every = 1 if T <= 1000 else 10

    y = np.zeros(utilities.shape[1])
    ledger = RegretLedger.zeros(len(y))
    rounds, logits, policies, regrets, per_action = [], [], [], [], []
    for t in range(1, T + 1):
        u = utilities[t - 1]
        pi = softmax(y)
        ledger.record(pi, u)
        y = learner_step(kind, y, u, step(t))
        if t % every == 0 or t == T:
            rounds.append(t)
            logits.append(y)
            policies.append(pi)
            regrets.append(ledger.regret)
            per_action.append(ledger.regrets)
    return RepeatedGameResult(kind, eta, forfeit, ledger, np.array(rounds), np.array(logits),
                              np.array(policies), np.array(regrets), np.array(per_action))


def sweep_step_size(kind: str, T: int, grid: Sequence[float] = ETA_GRID,
                    forfeit: bool = False, utilities=None) -> tuple[float, float]:
    """``(eta, final regret)`` minimising final regret; ties go to the smaller eta."""
    if len(grid) == 0:
        raise ValueError("step-size grid is empty")
    best = None
    for eta in sorted(grid):
        regret = run_repeated_game(kind, T, eta, forfeit, utilities).ledger.regret
        if best is None or regret < best[1]:
            best = (eta, regret)
    return best


def regret_fit(horizons: Sequence[int], regrets: Sequence[float]) -> tuple[float, float]:
    """Least-squares line ``regret ~ slope * T + intercept`` over all given horizons."""
    if len(horizons) != len(regrets) or len(horizons) < 2:
        raise ValueError("need at least two (T, regret) pairs of equal length")
    slope, intercept = np.polyfit(np.asarray(horizons, float), np.asarray(regrets, float), 1)
    return float(slope), float(intercept)
