"""Continuous-time learning dynamics on two-player matrix games.

Replicator dynamics (RD) and q-value policy gradient dynamics (QPG) can be
integrated either directly on the policy (forward Euler, with clip-and-
renormalise if a step leaves the simplex) or on the logits whose softmax
image they are: ``dy/dt = A`` for RD and ``dy/dt = pi * A`` for QPG, where
``A`` is the advantage. The logit form never leaves the simplex.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .evaluation import matrix_nashconv
from .games import MatrixGame
from .learners import softmax

log = logging.getLogger(__name__)

FIELDS = ("rd", "qpg")
SPACES = ("logit", "policy")


def rd_derivative(pi, u) -> np.ndarray:
    """``pi(a) (u(a) - pi . u)``."""
    pi = np.asarray(pi, dtype=float)
    u = np.asarray(u, dtype=float)
    return pi * (u - pi @ u)


def qpg_derivative(pi, advantage) -> np.ndarray:
    """``pi(a) (pi(a) A(a) - sum_b pi(b)^2 A(b))``."""
    pi = np.asarray(pi, dtype=float)
    adv = np.asarray(advantage, dtype=float)
    return pi * (pi * adv - (pi * pi) @ adv)


def speed_ratio(pi, u) -> float:
    """``|d pi_RD| / |d pi_QPG|`` for payoffs ``u`` at policy ``pi``."""
    pi = np.asarray(pi, dtype=float)
    u = np.asarray(u, dtype=float)
    rd = np.linalg.norm(rd_derivative(pi, u))
    qpg = np.linalg.norm(qpg_derivative(pi, u - pi @ u))
    return float(rd / qpg) if qpg > 0 else float("inf")


def speed_ratio_grid(game: MatrixGame, resolution: int = 50):
    """Speed ratio on an interior barycentric grid in symmetric self-play.

    Returns ``(points, ratios)`` with ``points`` of shape ``(n, 3)``.
    """
    pts = []
    for i in range(1, resolution):
        for j in range(1, resolution - i):
            k = resolution - i - j
            pts.append((i, j, k))
    points = np.array(pts, dtype=float) / resolution
    ratios = np.array([speed_ratio(p, game.row_payoffs @ p) for p in points])
    return points, ratios


class MatrixField:
    """Two-player vector field of ``kind`` on ``game``, in ``space`` coordinates.

    Both players' derivatives are evaluated at the same (pre-step) joint
    policy.
    """

    def __init__(self, game: MatrixGame, kind: str = "rd", space: str = "logit"):
        if kind not in FIELDS:
            raise ValueError(f"unknown field {kind!r}; valid: {', '.join(FIELDS)}")
        if space not in SPACES:
            raise ValueError(f"unknown space {space!r}; valid: {', '.join(SPACES)}")
        self.game, self.kind, self.space = game, kind, space

    def __call__(self, joint):
        out = []
        for pi, u in zip(joint, self.game.action_values(*joint)):
            adv = u - pi @ u
            if self.space == "logit":
                out.append(adv if self.kind == "rd" else pi * adv)
            elif self.kind == "rd":
                out.append(rd_derivative(pi, u))
            else:
                out.append(qpg_derivative(pi, adv))
        return out


def zero_field(joint):
    return [np.zeros_like(p) for p in joint]


@dataclass
class Trajectory:
    """Joint policies at ``t = 0, dt, 2 dt, ...``; ``policies[step, player]``."""

    policies: np.ndarray
    dt: float
    clip_events: int = 0

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self.policies))

    def __len__(self):
        return len(self.policies)


def _project(pi: np.ndarray):
    if np.any(pi < 0):
        pi = np.clip(pi, 0.0, None)
        return pi / pi.sum(), True
    return pi, False


def euler_integrate(field, pi0, dt: float, steps: int, space: str | None = None) -> Trajectory:
    """Forward-Euler integration of a two-player field from joint policy ``pi0``.

    ``space`` defaults to ``field.space`` (or ``"policy"`` for plain
    callables). In policy space a step that leaves the simplex is clipped to
    zero and renormalised; the number of such events is recorded.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if space is None:
        space = getattr(field, "space", "policy")
    joint = [np.asarray(p, dtype=float) for p in pi0]
    if space == "logit":
        logits = [np.log(p) for p in joint]
    n_players, n_actions = len(joint), max(len(p) for p in joint)
    out = np.zeros((steps + 1, n_players, n_actions))
    for k, p in enumerate(joint):
        out[0, k, : len(p)] = p
    clip_events = 0
    for step in range(1, steps + 1):
        deriv = field(joint)
        for k, d in enumerate(deriv):
            if not np.all(np.isfinite(d)):
                raise FloatingPointError(
                    f"non-finite derivative at step {step} for player {k}: {d} (policy {joint[k]})")
        if space == "logit":
            logits = [y + dt * d for y, d in zip(logits, deriv)]
            joint = [softmax(y) for y in logits]
        else:
            nxt = []
            for p, d in zip(joint, deriv):
                p, clipped = _project(p + dt * d)
                clip_events += clipped
                nxt.append(p)
            joint = nxt
        for k, p in enumerate(joint):
            out[step, k, : len(p)] = p
    if clip_events:
        log.debug("simplex clipping fired %d times", clip_events)
    return Trajectory(out, dt, clip_events)


def time_average(traj: Trajectory) -> np.ndarray:
    """Prefix means of the trajectory's joint policies."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    counts = np.arange(1, len(traj) + 1)[:, None, None]
    return np.cumsum(traj.policies, axis=0) / counts


def nashconv_series(game: MatrixGame, joints: np.ndarray) -> np.ndarray:
    """NashConv of each joint policy in a ``(steps, 2, n)`` array."""
    row, col = joints[:, 0, : game.num_actions_row], joints[:, 1, : game.num_actions_col]
    payoffs = game.row_payoffs
    return (col @ payoffs.T).max(axis=1) + (-(row @ payoffs)).max(axis=1)


def sample_simplex(rng: np.random.Generator, n: int, size: int | None = None) -> np.ndarray:
    """Uniform samples from the ``n``-simplex by normalised exponential spacings."""
    shape = (n,) if size is None else (size, n)
    e = rng.exponential(size=shape)
    return e / e.sum(axis=-1, keepdims=True)


def nashconv_of(game: MatrixGame, joint) -> float:
    return matrix_nashconv(game, joint[0][: game.num_actions_row], joint[1][: game.num_actions_col])
