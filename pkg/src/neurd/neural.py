"""Function-approximation NeuRD and softmax policy gradient.

A two-layer rectifier network maps information-state features to logits
(policy) or action values (critic). Gradients are written out by hand. The
policy step for both algorithms is a backward pass of a per-logit weight
``G`` through the network:

* NeuRD: ``G = q - v`` (skips the softmax), with the clipping indicator that
  drops any per-(state, action) contribution whose post-step logit would
  leave ``[-beta, beta]``;
* SPG:   ``G = pi * (q - v)`` (gradient through the softmax).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .evaluation import nashconv
from .games import STATIONARY, GameTree, RewardSchedule, apply_schedule
from .learners import softmax

log = logging.getLogger(__name__)

ALGOS = ("neurd", "spg")
TAU_GRID = (0.0, 0.01, 0.05, 0.1, 0.2)


# ---------------------------------------------------------------------------
# Parameterisations
# ---------------------------------------------------------------------------


@dataclass
class MlpParams:
    """``y = relu(x W1 + b1) W2 + b2``."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    @classmethod
    def init(cls, rng: np.random.Generator, n_in: int, n_out: int, hidden: int = 128) -> "MlpParams":
        """Uniform fan-in initialisation, ``U(-1/sqrt(fan_in), 1/sqrt(fan_in))``."""
        lim1, lim2 = 1.0 / math.sqrt(n_in), 1.0 / math.sqrt(hidden)
        return cls(rng.uniform(-lim1, lim1, (n_in, hidden)), rng.uniform(-lim1, lim1, hidden),
                   rng.uniform(-lim2, lim2, (hidden, n_out)), rng.uniform(-lim2, lim2, n_out))

    @classmethod
    def zeros(cls, n_in: int, n_out: int, hidden: int = 128) -> "MlpParams":
        return cls(np.zeros((n_in, hidden)), np.zeros(hidden), np.zeros((hidden, n_out)), np.zeros(n_out))

    def arrays(self):
        return (self.w1, self.b1, self.w2, self.b2)

    def forward(self, x):
        z = x @ self.w1 + self.b1
        h = np.maximum(z, 0.0)
        return h @ self.w2 + self.b2, (x, z, h)

    def backward(self, cache, g) -> "MlpParams":
        """Gradient of ``sum(g * y)`` with respect to every parameter."""
        x, z, h = cache
        dh = (g @ self.w2.T) * (z > 0)
        return MlpParams(x.T @ dh, dh.sum(axis=0), h.T @ g, g.sum(axis=0))

    def post_step_logits(self, cache, c):
        """Logit ``y(s, a)`` after a lone step ``c[s, a] * grad y(s, a)``, for every (s, a).

        Exact for this architecture: the step moves ``W2[:, a]`` by ``c h``,
        ``b2[a]`` by ``c``, and the first layer by ``c x (x) d`` /
        ``c d`` with ``d = W2[:, a] * relu'(z)``.
        """
        x, z, h = cache
        active = (z > 0).astype(float)
        xx = (x * x).sum(axis=1) + 1.0  # (n,)
        d = self.w2.T[None, :, :] * active[:, None, :]  # (n, A, H)
        z_new = z[:, None, :] + (c * xx[:, None])[:, :, None] * d
        h_new = np.maximum(z_new, 0.0)
        w2_new = self.w2.T[None, :, :] + c[:, :, None] * h[:, None, :]
        return (h_new * w2_new).sum(axis=2) + self.b2 + c

    def __add__(self, other):
        return MlpParams(*(a + b for a, b in zip(self.arrays(), other.arrays())))

    def scale(self, k: float):
        return MlpParams(*(k * a for a in self.arrays()))

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())


CriticParams = MlpParams


@dataclass
class TabularParams:
    """One logit per (information state, action): ``y = x theta`` on one-hot ``x``."""

    theta: np.ndarray

    def arrays(self):
        return (self.theta,)

    def forward(self, x):
        return x @ self.theta, (x,)

    def backward(self, cache, g) -> "TabularParams":
        return TabularParams(cache[0].T @ g)

    def post_step_logits(self, cache, c):
        x = cache[0]
        return x @ self.theta + c * (x * x).sum(axis=1)[:, None]

    def __add__(self, other):
        return TabularParams(self.theta + other.theta)

    def scale(self, k: float):
        return TabularParams(k * self.theta)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.theta)))


# ---------------------------------------------------------------------------
# Policy and critic operations
# ---------------------------------------------------------------------------


def featurize(key: str, game: GameTree) -> np.ndarray:
    """Feature vector of an information state (raises ``KeyError`` for unknown keys)."""
    player, s = game.lookup(key)
    return game.infostates[player].features[s]


def all_features(game: GameTree):
    """Stacked features and legal masks of every information state, player 0 first."""
    x = np.concatenate([t.features for t in game.infostates])
    mask = np.concatenate([t.legal_mask for t in game.infostates])
    return x, mask


def policy_forward(params, x, mask):
    """Masked logits and the softmax policy over legal actions."""
    y, _ = params.forward(x)
    return np.where(mask, y, -np.inf), softmax(y, mask)


def split_by_player(game: GameTree, rows: np.ndarray) -> list[np.ndarray]:
    sizes = [len(t) for t in game.infostates]
    return np.split(rows, np.cumsum(sizes)[:-1])


def entropy_regularized_q(q, pi, tau: float, mask=None) -> np.ndarray:
    """``q(a) - tau log pi(a)`` on legal actions."""
    q = np.asarray(q, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    legal = np.ones_like(pi, dtype=bool) if mask is None else mask
    if tau == 0:
        return q.copy()
    if np.any(legal & (pi <= 0)):
        raise ValueError("entropy regularisation needs pi > 0 on every legal action")
    with np.errstate(divide="ignore"):
        logp = np.where(legal, np.log(np.where(legal, pi, 1.0)), 0.0)
    return q - tau * logp


def _advantage(q, v, mask):
    return np.where(mask, q - np.asarray(v)[:, None], 0.0)


def _check(grad, what):
    if not grad.is_finite():
        raise FloatingPointError(f"non-finite {what} gradient")


def neurd_param_update(params, x, mask, q, v, eta: float, beta: float = math.inf, weights=None):
    """NeuRD step ``theta + eta * sum_{s,a} w_s grad y(s, a) (q - v)`` with logit clipping.

    A contribution is kept if applying it alone leaves ``y(s, a)`` inside
    ``[-beta, beta]``. A logit already pushed outside by shared parameters
    may still move back toward the interval.
    """
    w = np.ones(len(x)) if weights is None else np.asarray(weights, dtype=float)
    y, cache = params.forward(x)
    g = w[:, None] * _advantage(q, v, mask)
    if math.isfinite(beta):
        after = params.post_step_logits(cache, eta * g)
        inside = (after >= -beta) & (after <= beta)
        g = np.where(inside | (np.abs(after) < np.abs(y)), g, 0.0)
    grad = params.backward(cache, g)
    _check(grad, "NeuRD")
    return params + grad.scale(eta)


def spg_param_update(params, x, mask, q, v, eta: float, weights=None):
    """All-actions softmax policy gradient ``theta + eta * sum_{s,a} w_s grad pi(a|s) (q - v)``."""
    w = np.ones(len(x)) if weights is None else np.asarray(weights, dtype=float)
    y, cache = params.forward(x)
    pi = softmax(y, mask)
    g = w[:, None] * pi * _advantage(q, v, mask)
    grad = params.backward(cache, g)
    _check(grad, "SPG")
    return params + grad.scale(eta)


def policy_gradient_of_value(params, x, mask, q):
    """``grad_theta sum_s pi(.|s) . q(s, .)`` via the softmax Jacobian."""
    y, cache = params.forward(x)
    pi = softmax(y, mask)
    qm = np.where(mask, q, 0.0)
    g = pi * (qm - (pi * qm).sum(axis=1, keepdims=True))
    return params.backward(cache, g)


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------


@dataclass
class TrajectoryBatch:
    """Decision steps of ``num_episodes`` sampled episodes, flattened.

    ``episode``, ``node``, ``player``, ``infostate``, ``action`` and
    ``steps_to_end`` are parallel arrays in episode-major, time-minor order;
    ``terminal`` and ``utility`` hold each episode's final node and payoffs.
    """

    num_episodes: int
    episode: np.ndarray
    node: np.ndarray
    player: np.ndarray
    infostate: np.ndarray
    action: np.ndarray
    steps_to_end: np.ndarray
    terminal: np.ndarray
    utility: np.ndarray
    lengths: np.ndarray

    def returns(self, gamma: float = 1.0) -> np.ndarray:
        """Acting player's return from each step; rewards arrive only at the terminal."""
        r = self.utility[self.episode, self.player]
        return r if gamma == 1.0 else r * gamma ** (self.steps_to_end - 1)

    def episodes(self, game: GameTree):
        """Per episode: a list of ``(features, action, reward, player)``; the reward is
        nonzero only on each player's last step."""
        out = [[] for _ in range(self.num_episodes)]
        last = {}
        for i in range(len(self.episode)):
            e, p = int(self.episode[i]), int(self.player[i])
            feats = game.infostates[p].features[self.infostate[i]]
            out[e].append([feats, int(self.action[i]), 0.0, p])
            last[e, p] = len(out[e]) - 1
        for (e, p), j in last.items():
            out[e][j][2] = float(self.utility[e, p])
        return [[tuple(step) for step in ep] for ep in out]


def sample_trajectories(game: GameTree, policy, n: int, seed) -> TrajectoryBatch:
    """Sample ``n`` episodes of ``game`` under the joint ``policy``.

    Whole episodes are drawn at once: terminals are sampled in proportion
    to their reach probability and their decision steps are read off the
    precomputed root-to-terminal paths. ``seed`` is an int or a
    ``numpy.random.Generator``; results are deterministic given the seed.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    reach = game.reach(game.edge_probs(policy))[game.terminals]
    cdf = np.cumsum(reach)
    picks = np.searchsorted(cdf, rng.random(n) * cdf[-1], side="right")
    picks = np.minimum(picks, len(cdf) - 1)
    # a draw landing exactly on a zero-probability terminal moves to the next reachable one
    while np.any(reach[picks] <= 0):
        bad = reach[picks] <= 0
        picks[bad] = np.minimum(picks[bad] + 1, len(cdf) - 1)

    paths = game.decision_path[picks]
    valid = paths >= 0
    lengths = valid.sum(axis=1)
    episode = np.repeat(np.arange(n), lengths)
    node = paths[valid]
    action = game.path_action[picks][valid]
    starts = np.cumsum(lengths) - lengths
    steps_to_end = lengths[episode] - (np.arange(len(episode)) - starts[episode])
    terminal = game.terminals[picks]
    return TrajectoryBatch(n, episode, node, game.player[node], game.infostate[node], action,
                           steps_to_end, terminal, game.utility[terminal], lengths)


# ---------------------------------------------------------------------------
# Critic
# ---------------------------------------------------------------------------


def update_critic(w: MlpParams, x, action, target, lr: float, reduction: str = "sum") -> MlpParams:
    """One gradient step on ``0.5 (q(s, a; w) - R)^2`` summed (or averaged) over the samples."""
    if lr < 0:
        raise ValueError("lr must be >= 0")
    if reduction not in ("sum", "mean"):
        raise ValueError(f"reduction must be 'sum' or 'mean', got {reduction!r}")
    if len(x) == 0 or lr == 0:
        return w
    q, cache = w.forward(x)
    rows = np.arange(len(x))
    g = np.zeros_like(q)
    g[rows, action] = target - q[rows, action]
    if reduction == "mean":
        g /= len(x)
    grad = w.backward(cache, g)
    _check(grad, "critic")
    return w + grad.scale(lr)


def critic_samples(game: GameTree, batch: TrajectoryBatch, gamma: float = 1.0):
    feats = _step_features(game, batch)
    return feats, batch.action, batch.returns(gamma)


def _step_features(game: GameTree, batch: TrajectoryBatch):
    offsets = np.cumsum([0] + [len(t) for t in game.infostates])
    x_all, _ = all_features(game)
    return x_all[offsets[batch.player] + batch.infostate]


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------


@dataclass
class TrainConfig:
    policy_updates: int = 20_000
    batch_size: int = 256
    critic_batch_size: int = 4
    critic_updates_per_policy: int = 4
    policy_lr: float = 0.002
    critic_lr: float = 0.01
    critic_reduction: str = "sum"
    tau: float = 0.0
    beta: float = 2.0
    gamma: float = 1.0
    hidden: int = 128
    eval_every: int = 1000
    seed: int = 0
    schedule: RewardSchedule = field(default_factory=lambda: STATIONARY)


class Trainer:
    """Actor-critic self-play with a single policy and critic network shared by both players."""

    def __init__(self, game: GameTree, algo: str, config: TrainConfig):
        if algo not in ALGOS:
            raise ValueError(f"unknown algorithm {algo!r}; valid: {', '.join(ALGOS)}")
        self.game, self.algo, self.config = game, algo, config
        self.rng = np.random.default_rng(config.seed)
        self.x, self.mask = all_features(game)
        self.offsets = np.cumsum([0] + [len(t) for t in game.infostates])
        n_in, n_out = self.x.shape[1], game.max_actions
        self.theta = MlpParams.init(self.rng, n_in, n_out, config.hidden)
        self.critic = MlpParams.init(self.rng, n_in, n_out, config.hidden)
        self.updates = 0

    def joint_policy(self):
        _, pi = policy_forward(self.theta, self.x, self.mask)
        return split_by_player(self.game, pi)

    def step(self) -> None:
        cfg = self.config
        game = apply_schedule(self.game, cfg.schedule, self.updates)
        policy = self.joint_policy()
        n_critic = cfg.critic_updates_per_policy * cfg.critic_batch_size
        # every batch of this outer iteration follows the same policy, so draw them together
        batch = sample_trajectories(game, policy, n_critic + cfg.batch_size, self.rng)
        all_rows = self.offsets[batch.player] + batch.infostate
        returns = batch.returns(cfg.gamma)
        group = batch.episode // cfg.critic_batch_size
        for k in range(cfg.critic_updates_per_policy):
            sel = group == k
            self.critic = update_critic(self.critic, self.x[all_rows[sel]], batch.action[sel],
                                        returns[sel], cfg.critic_lr, cfg.critic_reduction)

        rows = all_rows[batch.episode >= n_critic]
        uniq, counts = np.unique(rows, return_counts=True)
        x, mask = self.x[uniq], self.mask[uniq]
        _, pi = policy_forward(self.theta, x, mask)
        q, _ = self.critic.forward(x)
        q = entropy_regularized_q(np.where(mask, q, 0.0), pi, cfg.tau, mask)
        v = (pi * q).sum(axis=1)
        weights = counts / cfg.batch_size
        if self.algo == "neurd":
            self.theta = neurd_param_update(self.theta, x, mask, q, v, cfg.policy_lr, cfg.beta, weights)
        else:
            self.theta = spg_param_update(self.theta, x, mask, q, v, cfg.policy_lr, weights)
        self.updates += 1

    def evaluate(self) -> float:
        game = apply_schedule(self.game, self.config.schedule, max(self.updates - 1, 0))
        return nashconv(game, self.joint_policy()).nashconv


def train(game: GameTree, algo: str, config: TrainConfig | None = None, callback=None):
    """Train ``algo`` and return NashConv records of the last-iterate policy.

    Records ``{"update", "phase", "tau", "nashconv"}`` are taken before
    training, every ``eval_every`` policy updates, and at the end.
    """
    config = config or TrainConfig()
    trainer = Trainer(game, algo, config)
    records = []

    def record():
        rec = {"update": trainer.updates,
               "phase": config.schedule.phase_index(max(trainer.updates - 1, 0)),
               "tau": config.tau, "nashconv": trainer.evaluate()}
        records.append(rec)
        if callback is not None:
            callback(rec)

    record()
    for u in range(1, config.policy_updates + 1):
        trainer.step()
        if u % config.eval_every == 0 or u == config.policy_updates:
            record()
    return records
