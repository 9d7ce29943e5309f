"""Benchmark games: normal-form RPS / matching pennies and extensive-form
Kuhn poker, Leduc poker and imperfect-information Goofspiel.

Extensive-form games are expanded once into a flat, depth-ordered node table
(:class:`GameTree`) so that reach probabilities, values and best responses can
be computed level by level with numpy instead of recursive tree walks.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

CHANCE = -1
TERMINAL = -2


# ---------------------------------------------------------------------------
# Normal-form games
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MatrixGame:
    """Two-player zero-sum matrix game; the column player receives ``-row_payoffs``."""

    row_payoffs: np.ndarray
    name: str = "matrix"

    def __post_init__(self):
        payoffs = np.array(self.row_payoffs, dtype=float)
        if payoffs.ndim != 2 or payoffs.size == 0:
            raise ValueError("row_payoffs must be a non-empty matrix")
        if not np.all(np.isfinite(payoffs)):
            raise ValueError("row_payoffs must be finite")
        payoffs.setflags(write=False)
        object.__setattr__(self, "row_payoffs", payoffs)

    @property
    def num_actions_row(self) -> int:
        return self.row_payoffs.shape[0]

    @property
    def num_actions_col(self) -> int:
        return self.row_payoffs.shape[1]

    @property
    def num_actions(self) -> tuple[int, int]:
        return self.row_payoffs.shape

    def action_values(self, row_policy, col_policy):
        """Per-action expected payoffs ``(u_row, u_col)`` against the other player."""
        u_row = self.row_payoffs @ np.asarray(col_policy, dtype=float)
        u_col = -(np.asarray(row_policy, dtype=float) @ self.row_payoffs)
        return u_row, u_col

    def scaled(self, sign: float) -> "MatrixGame":
        return MatrixGame(sign * self.row_payoffs, name=self.name)

    def to_tree(self) -> "GameTree":
        """Sequential encoding: the column player moves without seeing the row action."""
        return build_tree(_MatrixRules(self))


def rps_game(nu: float = 1.0) -> MatrixGame:
    """Rock-paper-scissors where the rock-vs-scissors payoff is ``nu``."""
    if not math.isfinite(nu):
        raise ValueError(f"nu must be finite, got {nu}")
    payoffs = [[0.0, -1.0, nu], [1.0, 0.0, -1.0], [-nu, 1.0, 0.0]]
    return MatrixGame(np.array(payoffs), name=f"rps:{nu:g}")


def matching_pennies() -> MatrixGame:
    return MatrixGame(np.array([[1.0, -1.0], [-1.0, 1.0]]), name="matching_pennies")


def matching_pennies_utilities(T: int, forfeit: bool = False) -> np.ndarray:
    """Utility vectors of the "even" player against the scripted opponent.

    The opponent plays heads for the first ``floor(0.4 T)`` rounds and tails
    afterwards. Row ``t - 1`` holds ``(u(H), u(T)[, u(forfeit)])`` for round
    ``t``.
    """
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    switch = math.floor(0.4 * T)
    rounds = np.arange(1, T + 1)
    heads = np.where(rounds <= switch, 1.0, -1.0)
    cols = [heads, -heads]
    if forfeit:
        cols.append(np.full(T, -1.0))
    return np.stack(cols, axis=1)


# ---------------------------------------------------------------------------
# Extensive-form games
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlayerInfoStates:
    """Information states of one player, in a fixed order."""

    keys: tuple[str, ...]
    num_actions: np.ndarray  # (S,)
    legal_mask: np.ndarray  # (S, A_max) bool
    features: np.ndarray  # (S, F)
    index: dict = field(repr=False, compare=False)

    def __len__(self):
        return len(self.keys)


class GameTree:
    """Immutable two-player zero-sum extensive-form game in flat form.

    Nodes are stored in breadth-first order, so ``levels[d]`` is the
    contiguous slice of nodes at depth ``d`` and every parent precedes its
    children.
    """

    num_players = 2

    def __init__(self, name, parent, action, player, infostate, chance_prob,
                 utility, histories, children, infostates, action_names):
        self.name = name
        self.parent = parent
        self.action = action
        self.player = player
        self.infostate = infostate
        self.chance_prob = chance_prob
        self.utility = utility
        self.histories = histories
        self.children = children
        self.infostates = infostates
        self.action_names = action_names

        n = len(parent)
        depth = np.zeros(n, dtype=np.int64)
        for i in range(1, n):
            depth[i] = depth[parent[i]] + 1
        self.depth = depth
        bounds = np.searchsorted(depth, np.arange(depth.max() + 2))
        self.levels = [slice(int(bounds[d]), int(bounds[d + 1])) for d in range(len(bounds) - 1)]

        safe_parent = np.where(parent >= 0, parent, 0)
        self.parent_player = np.where(parent >= 0, player[safe_parent], TERMINAL)
        self.parent_infostate = np.where(parent >= 0, infostate[safe_parent], -1)
        self.is_terminal = player == TERMINAL
        self.max_actions = max(t.legal_mask.shape[1] for t in infostates)
        chance_table = np.zeros(children.shape)
        rows, cols = np.nonzero(children >= 0)
        is_chance = player[rows] == CHANCE
        chance_table[rows[is_chance], cols[is_chance]] = chance_prob[children[rows[is_chance], cols[is_chance]]]
        chance_table.setflags(write=False)
        self.chance_table = chance_table

        # root-to-terminal decision paths, for sampling whole episodes at once
        self.terminals = np.flatnonzero(self.is_terminal)
        paths = []
        for z in self.terminals:
            path, node = [], int(z)
            while parent[node] >= 0:
                child, node = node, int(parent[node])
                if player[node] >= 0:
                    path.append((node, int(action[child])))
            paths.append(path[::-1])
        width = max(1, max(len(p) for p in paths))
        self.decision_path = np.full((len(paths), width), -1, dtype=np.int64)
        self.path_action = np.full((len(paths), width), -1, dtype=np.int64)
        for i, path in enumerate(paths):
            for k, (node, act) in enumerate(path):
                self.decision_path[i, k] = node
                self.path_action[i, k] = act
        for arr in (self.terminals, self.decision_path, self.path_action):
            arr.setflags(write=False)

        self.representative = []
        for p, table in enumerate(infostates):
            nodes = np.flatnonzero(player == p)
            rep = np.full(len(table), -1, dtype=np.int64)
            rep[infostate[nodes][::-1]] = nodes[::-1]
            if np.any(depth[rep[infostate[nodes]]] != depth[nodes]):
                raise ValueError("histories of one information state must share a depth")
            rep.setflags(write=False)
            self.representative.append(rep)
        for arr in (parent, action, player, infostate, chance_prob, utility,
                    children, depth, self.parent_player, self.parent_infostate):
            arr.setflags(write=False)

    def __repr__(self):
        return (f"GameTree({self.name!r}, nodes={self.num_nodes}, "
                f"infostates={[len(t) for t in self.infostates]})")

    @property
    def num_nodes(self) -> int:
        return len(self.parent)

    @property
    def num_infostates(self) -> int:
        return sum(len(t) for t in self.infostates)

    def utility_spread(self) -> float:
        """Largest difference between any two terminal utilities of player 0."""
        u = self.utility[self.is_terminal, 0]
        return float(u.max() - u.min())

    def scaled(self, sign: float) -> "GameTree":
        """Shallow copy with every terminal utility multiplied by ``sign``."""
        clone = object.__new__(GameTree)
        clone.__dict__.update(self.__dict__)
        utility = sign * self.utility
        utility.setflags(write=False)
        clone.utility = utility
        return clone

    def uniform_policy(self) -> list[np.ndarray]:
        return [t.legal_mask / t.num_actions[:, None] for t in self.infostates]

    def policy_from_dict(self, table: dict) -> list[np.ndarray]:
        """Joint policy arrays from ``{info-state key: probabilities}``.

        Probabilities are listed over legal actions only; missing keys
        default to uniform.
        """
        policy = self.uniform_policy()
        for p, infos in enumerate(self.infostates):
            for key, probs in table.items():
                s = infos.index.get(key)
                if s is None:
                    continue
                probs = np.asarray(probs, dtype=float)
                if len(probs) != infos.num_actions[s]:
                    raise ValueError(f"{key}: expected {infos.num_actions[s]} probabilities")
                policy[p][s] = 0.0
                policy[p][s, infos.legal_mask[s]] = probs
        return policy

    def policy_to_dict(self, policy) -> dict:
        """``{key: probabilities over legal actions}``, legal actions in id order."""
        return {
            key: [float(x) for x in policy[p][s, infos.legal_mask[s]]]
            for p, infos in enumerate(self.infostates)
            for s, key in enumerate(infos.keys)
        }

    def lookup(self, key: str) -> tuple[int, int]:
        """``(player, index)`` of an information-state key."""
        for p, infos in enumerate(self.infostates):
            if key in infos.index:
                return p, infos.index[key]
        raise KeyError(f"unknown information state {key!r} for {self.name}")

    # -- vectorised tree passes ---------------------------------------------

    def edge_probs(self, policy) -> np.ndarray:
        """Probability of the edge into each node (1 for the root)."""
        prob = np.ones(self.num_nodes)
        chance = self.parent_player == CHANCE
        prob[chance] = self.chance_prob[chance]
        for p in range(self.num_players):
            mask = self.parent_player == p
            prob[mask] = policy[p][self.parent_infostate[mask], self.action[mask]]
        return prob

    def reach(self, edge_prob: np.ndarray) -> np.ndarray:
        """Top-down product of edge probabilities."""
        reach = np.ones(self.num_nodes)
        for lvl in self.levels[1:]:
            reach[lvl] = reach[self.parent[lvl]] * edge_prob[lvl]
        return reach

    def player_reaches(self, policy, edge_prob=None):
        """Per player ``k``: ``(rho_k, rho_minus_k)`` over all nodes."""
        if edge_prob is None:
            edge_prob = self.edge_probs(policy)
        out = []
        for k in range(self.num_players):
            own = self.parent_player == k
            out.append((self.reach(np.where(own, edge_prob, 1.0)),
                        self.reach(np.where(own, 1.0, edge_prob))))
        return out

    def backup(self, edge_prob: np.ndarray, leaf_values: np.ndarray) -> np.ndarray:
        """Bottom-up expected values; ``leaf_values`` is read at terminals only."""
        values = np.where(self.is_terminal, leaf_values, 0.0)
        for d in range(len(self.levels) - 1, 0, -1):
            lvl, up = self.levels[d], self.levels[d - 1]
            values[up] += np.bincount(self.parent[lvl] - up.start,
                                      weights=edge_prob[lvl] * values[lvl],
                                      minlength=up.stop - up.start)
        return values


def build_tree(rules) -> GameTree:
    """Expand a rules object into a :class:`GameTree` (breadth-first)."""
    num_players = 2
    parent, action, player, infostate, chance_prob = [], [], [], [], []
    utility, histories, child_lists = [], [], []
    keys = [dict() for _ in range(num_players)]
    nactions = [[] for _ in range(num_players)]
    feats = [[] for _ in range(num_players)]
    observations = [dict() for _ in range(num_players)]

    frontier = [(rules.initial_state(), -1, -1, 1.0, ())]
    while frontier:
        next_frontier = []
        for state, par, act, cprob, hist in frontier:
            node = len(parent)
            parent.append(par)
            action.append(act)
            chance_prob.append(cprob)
            histories.append(hist)
            if par >= 0:
                child_lists[par].append(node)
            child_lists.append([])
            if rules.is_terminal(state):
                player.append(TERMINAL)
                infostate.append(-1)
                u = rules.returns(state)
                if abs(u[0] + u[1]) != 0.0:
                    raise ValueError(f"non zero-sum terminal {hist}: {u}")
                utility.append(u)
                continue
            utility.append((0.0, 0.0))
            cur = rules.current_player(state)
            player.append(cur)
            if cur == CHANCE:
                outcomes = rules.chance_outcomes(state)
                total = sum(pr for _, pr in outcomes)
                if abs(total - 1.0) > 1e-12:
                    raise ValueError(f"chance probabilities sum to {total} at {hist}")
                infostate.append(-1)
                for a, pr in outcomes:
                    next_frontier.append((rules.next_state(state, a), node, a, pr, hist + (a,)))
                continue
            legal = tuple(rules.legal_actions(state))
            if not legal:
                raise ValueError(f"no legal actions at {hist}")
            key = rules.info_state_key(state, cur)
            obs = rules.observation_sequence(state, cur)
            if key not in keys[cur]:
                keys[cur][key] = len(keys[cur])
                nactions[cur].append(legal)
                feats[cur].append(np.asarray(rules.features(state, cur), dtype=float))
                observations[cur][key] = obs
            else:
                s = keys[cur][key]
                if nactions[cur][s] != legal:
                    raise ValueError(f"legal actions differ within info state {key!r}")
                if observations[cur][key] != obs:
                    raise ValueError(f"perfect recall violated at {key!r}")
            infostate.append(keys[cur][key])
            for a in legal:
                next_frontier.append((rules.next_state(state, a), node, a, 1.0, hist + (a,)))
        frontier = next_frontier

    width = max(len(c) for c in child_lists)
    children = np.full((len(parent), max(width, 1)), -1, dtype=np.int64)
    for i, kids in enumerate(child_lists):
        for c in kids:
            children[i, action[c]] = c

    tables = []
    a_max = len(rules.action_names)
    for p in range(num_players):
        mask = np.zeros((len(nactions[p]), a_max), dtype=bool)
        for s, legal in enumerate(nactions[p]):
            mask[s, list(legal)] = True
        n = mask.sum(axis=1)
        f = np.stack(feats[p])
        ordered = sorted(keys[p], key=keys[p].get)
        for arr in (n, mask, f):
            arr.setflags(write=False)
        tables.append(PlayerInfoStates(tuple(ordered), n, mask, f, dict(keys[p])))

    return GameTree(
        name=rules.name,
        parent=np.array(parent, dtype=np.int64),
        action=np.array(action, dtype=np.int64),
        player=np.array(player, dtype=np.int64),
        infostate=np.array(infostate, dtype=np.int64),
        chance_prob=np.array(chance_prob, dtype=float),
        utility=np.array(utility, dtype=float),
        histories=tuple(histories),
        children=children,
        infostates=tuple(tables),
        action_names=tuple(rules.action_names),
    )


def _one_hot(index, size):
    v = [0.0] * size
    if index is not None:
        v[index] = 1.0
    return v


class _MatrixRules:
    def __init__(self, game: MatrixGame):
        self.game = game
        self.name = game.name
        self.action_names = tuple(str(a) for a in range(max(game.num_actions)))

    def initial_state(self):
        return ()

    def is_terminal(self, s):
        return len(s) == 2

    def current_player(self, s):
        return len(s)

    def legal_actions(self, s):
        return range(self.game.num_actions[len(s)])

    def next_state(self, s, a):
        return s + (a,)

    def info_state_key(self, s, p):
        return f"p{p}"

    def observation_sequence(self, s, p):
        return ()

    def features(self, s, p):
        return _one_hot(p, 2)

    def returns(self, s):
        u = float(self.game.row_payoffs[s[0], s[1]])
        return (u, -u)


KUHN_CARDS = "JQK"


class _KuhnRules:
    """Three-card Kuhn poker. Actions: 0 = pass/check/fold, 1 = bet/call."""

    name = "kuhn"
    action_names = ("p", "b")
    deals = tuple(itertools.permutations(range(3), 2))

    def initial_state(self):
        return (None, "")

    def is_terminal(self, s):
        return s[1] in ("pp", "bp", "bb", "pbp", "pbb")

    def current_player(self, s):
        return CHANCE if s[0] is None else len(s[1]) % 2

    def chance_outcomes(self, s):
        return [(i, 1.0 / len(self.deals)) for i in range(len(self.deals))]

    def legal_actions(self, s):
        return range(2)

    def next_state(self, s, a):
        if s[0] is None:
            return (self.deals[a], "")
        return (s[0], s[1] + "pb"[a])

    def info_state_key(self, s, p):
        return f"{KUHN_CARDS[s[0][p]]}:{s[1]}"

    def observation_sequence(self, s, p):
        return (s[0][p], s[1])

    def features(self, s, p):
        bets = []
        for i in range(3):
            bets += _one_hot("pb".index(s[1][i]) if i < len(s[1]) else None, 2)
        return _one_hot(p, 2) + _one_hot(s[0][p], 3) + bets

    def returns(self, s):
        cards, h = s
        sign = 1.0 if cards[0] > cards[1] else -1.0
        if h == "bp":
            u = 1.0
        elif h == "pbp":
            u = -1.0
        elif h == "pp":
            u = sign
        else:
            u = 2.0 * sign
        return (u, -u)


class _LeducRules:
    """Leduc poker with a six-card deck (ranks J, Q, K; two suits each).

    Cards are ``0..5`` with rank ``card // 2``; information-state keys name
    the exact card (suit included). Actions: 0 = fold, 1 = check/call,
    2 = raise. Fold is legal only when facing a bet.
    """

    name = "leduc"
    action_names = ("f", "c", "r")
    ranks = "JQK"
    raise_sizes = (2, 4)
    max_raises = 2
    max_round_actions = 4

    # state: (cards, public, rounds) where rounds is a tuple of action strings
    def initial_state(self):
        return ((), None, ("",))

    @staticmethod
    def _round_over(seq):
        return seq.endswith("c") and len(seq) >= 2 or seq.endswith("f")

    def is_terminal(self, s):
        cards, public, rounds = s
        last = rounds[-1]
        if last.endswith("f"):
            return True
        return len(rounds) == 2 and self._round_over(last)

    def current_player(self, s):
        cards, public, rounds = s
        if len(cards) < 2:
            return CHANCE
        if len(rounds) == 2 and public is None:
            return CHANCE
        return len(rounds[-1]) % 2

    def chance_outcomes(self, s):
        cards, public, _ = s
        remaining = [c for c in range(6) if c not in cards]
        return [(c, 1.0 / len(remaining)) for c in remaining]

    def legal_actions(self, s):
        seq = s[2][-1]
        raises = seq.count("r")
        facing_bet = seq.endswith("r")
        legal = [0, 1] if facing_bet else [1]
        if raises < self.max_raises:
            legal.append(2)
        return legal

    def next_state(self, s, a):
        cards, public, rounds = s
        if len(cards) < 2:
            return (cards + (a,), public, rounds)
        if len(rounds) == 2 and public is None:
            return (cards, a, rounds)
        seq = rounds[-1] + "fcr"[a]
        rounds = rounds[:-1] + (seq,)
        if a == 1 and self._round_over(seq) and len(rounds) == 1:
            rounds = rounds + ("",)
        return (cards, public, rounds)

    def _contributions(self, rounds):
        contrib = [1, 1]
        for r, seq in enumerate(rounds):
            size = self.raise_sizes[r]
            for i, ch in enumerate(seq):
                p = i % 2
                if ch == "c":
                    contrib[p] = contrib[1 - p]
                elif ch == "r":
                    contrib[p] = contrib[1 - p] + size
        return contrib

    def returns(self, s):
        cards, public, rounds = s
        contrib = self._contributions(rounds)
        seq = rounds[-1]
        if seq.endswith("f"):
            folder = (len(seq) - 1) % 2
            u0 = -contrib[0] if folder == 0 else contrib[1]
            return (float(u0), float(-u0))
        strength = []
        for p in range(2):
            rank = cards[p] // 2
            pair = rank == public // 2
            strength.append((pair, rank))
        if strength[0] == strength[1]:
            u0 = 0.0
        elif strength[0] > strength[1]:
            u0 = float(contrib[1])
        else:
            u0 = -float(contrib[0])
        return (u0, -u0)

    def _card(self, c):
        return "-" if c is None else f"{self.ranks[c // 2]}{'sh'[c % 2]}"

    def info_state_key(self, s, p):
        cards, public, rounds = s
        return f"{self._card(cards[p])}:{self._card(public)}:{'/'.join(rounds)}"

    def observation_sequence(self, s, p):
        cards, public, rounds = s
        return (cards[p], public, rounds)

    def features(self, s, p):
        cards, public, rounds = s
        f = _one_hot(p, 2) + _one_hot(cards[p], 6) + _one_hot(public, 6)
        for r in range(2):
            seq = rounds[r] if r < len(rounds) else ""
            for i in range(self.max_round_actions):
                f += _one_hot("fcr".index(seq[i]) if i < len(seq) else None, 3)
        return f


class _GoofspielRules:
    """Five-card imperfect-information Goofspiel.

    Point cards are revealed in descending order (5, 4, ..., 1). Each turn
    player 0 bids first, then player 1 bids without seeing that bid; both
    players then observe only who won the point card (ties discard it). The
    last turn has a single card left per player and is played automatically.
    Utility is the point difference.
    """

    name = "goofspiel5"
    num_cards = 5

    def __init__(self):
        self.action_names = tuple(str(c + 1) for c in range(self.num_cards))
        self.points = tuple(range(self.num_cards, 0, -1))

    # state: (bids0, bids1) where len(bids1) <= len(bids0) <= len(bids1) + 1
    def initial_state(self):
        return ((), ())

    def _hand(self, bids):
        return [c for c in range(self.num_cards) if c not in bids]

    def is_terminal(self, s):
        return len(s[0]) == len(s[1]) == self.num_cards - 1

    def current_player(self, s):
        return 0 if len(s[0]) == len(s[1]) else 1

    def legal_actions(self, s):
        return range(len(self._hand(s[self.current_player(s)])))

    def next_state(self, s, a):
        p = self.current_player(s)
        card = self._hand(s[p])[a]
        return (s[0] + (card,), s[1]) if p == 0 else (s[0], s[1] + (card,))

    @staticmethod
    def _outcomes(mine, theirs):
        return tuple((m > t) - (m < t) for m, t in zip(mine, theirs))

    def info_state_key(self, s, p):
        done = len(s[1])
        mine, theirs = s[p][:done], s[1 - p][:done]
        res = "".join("-=+"[o + 1] for o in self._outcomes(mine, theirs))
        return f"p{p}:{','.join(str(b + 1) for b in mine)}:{res}"

    def observation_sequence(self, s, p):
        done = len(s[1])
        return (s[p][:done], self._outcomes(s[p][:done], s[1 - p][:done]))

    def features(self, s, p):
        done = len(s[1])
        mine, theirs = s[p][:done], s[1 - p][:done]
        outcomes = self._outcomes(mine, theirs)
        turns = self.num_cards - 1
        f = _one_hot(p, 2)
        for t in range(turns):
            f += _one_hot(mine[t] if t < done else None, self.num_cards)
        for t in range(turns):
            f += _one_hot(outcomes[t] + 1 if t < done else None, 3)
        return f

    def returns(self, s):
        b0 = list(s[0]) + self._hand(s[0])
        b1 = list(s[1]) + self._hand(s[1])
        u0 = 0.0
        for pts, x, y in zip(self.points, b0, b1):
            u0 += pts * ((x > y) - (x < y))
        return (u0, -u0)


_TREE_CACHE: dict = {}


def _cached(rules_cls):
    name = rules_cls.name
    if name not in _TREE_CACHE:
        _TREE_CACHE[name] = build_tree(rules_cls())
    return _TREE_CACHE[name]


def kuhn_game() -> GameTree:
    return _cached(_KuhnRules)


def leduc_game() -> GameTree:
    return _cached(_LeducRules)


def goofspiel5_game() -> GameTree:
    return _cached(_GoofspielRules)


# ---------------------------------------------------------------------------
# Reward schedules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Phase:
    """Utility transform for one phase: multiply by ``sign``; for RPS, ``nu`` replaces the bias."""

    sign: float = 1.0
    nu: float | None = None


@dataclass(frozen=True)
class RewardSchedule:
    boundaries: tuple[int, ...] = ()
    phases: tuple[Phase, ...] = (Phase(),)

    def __post_init__(self):
        object.__setattr__(self, "boundaries", tuple(int(b) for b in self.boundaries))
        object.__setattr__(self, "phases", tuple(self.phases))
        if len(self.phases) != len(self.boundaries) + 1:
            raise ValueError("need exactly one more phase than boundaries")
        if any(b <= a for a, b in zip(self.boundaries, self.boundaries[1:])):
            raise ValueError("phase boundaries must be strictly increasing")

    def phase_index(self, t: int) -> int:
        return bisect.bisect_right(self.boundaries, t)

    def phase(self, t: int) -> Phase:
        return self.phases[self.phase_index(t)]

    @classmethod
    def negation(cls, every: int, num_phases: int = 3) -> "RewardSchedule":
        """Utilities negated in every other phase, switching every ``every`` iterations."""
        bounds = tuple(every * k for k in range(1, num_phases))
        phases = tuple(Phase(sign=(-1.0) ** k) for k in range(num_phases))
        return cls(bounds, phases)

    @classmethod
    def nu_schedule(cls, nus: Sequence[float], every: int) -> "RewardSchedule":
        bounds = tuple(every * k for k in range(1, len(nus)))
        return cls(bounds, tuple(Phase(nu=float(v)) for v in nus))


STATIONARY = RewardSchedule()


def apply_schedule(game, schedule: RewardSchedule, t: int):
    """The game whose utilities are in force at iteration ``t``."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    phase = schedule.phase(t)
    if isinstance(game, MatrixGame):
        if phase.nu is not None:
            game = rps_game(phase.nu)
        return game if phase.sign == 1.0 else game.scaled(phase.sign)
    if phase.nu is not None:
        raise ValueError("nu phases only apply to matrix games")
    return game if phase.sign == 1.0 else game.scaled(phase.sign)


# ---------------------------------------------------------------------------
# Name resolution
# ---------------------------------------------------------------------------

GAME_NAMES = ("kuhn", "leduc", "goofspiel5", "rps:<nu>", "matching_pennies[:forfeit]")


def load_game(name: str):
    """Resolve a CLI game descriptor such as ``kuhn`` or ``rps:3``."""
    if name == "kuhn":
        return kuhn_game()
    if name == "leduc":
        return leduc_game()
    if name == "goofspiel5":
        return goofspiel5_game()
    if name == "rps":
        return rps_game(1.0)
    if name.startswith("rps:"):
        try:
            return rps_game(float(name[4:]))
        except ValueError:
            pass
    if name in ("matching_pennies", "matching_pennies:forfeit"):
        return matching_pennies()
    raise ValueError(f"unknown game {name!r}; valid: {', '.join(GAME_NAMES)}")
