"""Experiment configuration, named presets and the seeded CSV runner.

A configuration is a flat ``key=value`` text file; presets are the same
mappings shipped in code. Every (experiment, seed) pair is a pure function
of the configuration, so rerunning a preset reproduces its CSV files byte
for byte.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import cfr, dynamics, learners, neural
from .games import STATIONARY, GameTree, MatrixGame, RewardSchedule, apply_schedule, load_game

log = logging.getLogger(__name__)

EXPERIMENTS = ("pennies", "dynamics", "cfr", "train")
VALID_LEARNERS = {
    "pennies": learners.LEARNERS,
    "dynamics": dynamics.FIELDS,
    "cfr": cfr.CFR_LEARNERS,
    "train": neural.ALGOS,
}
ETA_SCHEDULES = {
    "pennies": ("constant", "sweep", "anytime"),
    "dynamics": ("constant",),
    "cfr": ("constant", "hedge"),
    "train": ("constant",),
}

CSV_COLUMNS = {
    "pennies": ("round", "action", "logit", "prob", "regret", "learner", "eta", "forfeit"),
    "dynamics": ("trajectory_id", "step", "time", "player", "action", "prob", "avg_prob", "nashconv_avg"),
    "cfr": ("iter", "phase", "learner", "eta", "nashconv", "regret_p0", "regret_p1", "bound_p0", "bound_p1"),
    "train": ("seed", "update", "phase", "tau", "nashconv"),
}
# (metric summarised across seeds, columns identifying a checkpoint)
SUMMARY_KEYS = {
    "pennies": ("regret", ("eta", "forfeit", "round", "action")),
    "dynamics": ("nashconv_avg", ("step", "time")),
    "cfr": ("nashconv", ("eta", "iter", "phase")),
    "train": ("nashconv", ("tau", "update", "phase")),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment.

    ``iterations`` is the horizon: rounds (pennies), Euler steps
    (dynamics), CFR iterations or policy updates (train). ``learners``
    holds learners, vector fields or algorithms depending on the
    experiment. ``switch_every > 0`` negates the rewards every that many
    iterations, or switches the RPS bias through ``nus`` when given.
    """

    experiment: str = "cfr"
    name: str = ""
    game: str = "kuhn"
    learners: tuple = ("neurd",)
    etas: tuple = (1.0,)
    eta_schedule: str = "constant"
    taus: tuple = (0.0,)
    beta: float = 2.0
    iterations: int = 1000
    seeds: tuple = (0,)
    switch_every: int = 0
    num_phases: int = 3
    nus: tuple = ()
    eval_every: int = 10
    dt: float = 0.1
    trajectories: int = 20
    space: str = "logit"
    record_every: int = 1
    save_policy: bool = False
    out_dir: str = "results"

    @property
    def label(self) -> str:
        return self.name or self.experiment

    def schedule(self) -> RewardSchedule:
        if self.nus:
            if self.switch_every < 1:
                raise ValueError("nus needs switch_every >= 1")
            return RewardSchedule.nu_schedule(self.nus, self.switch_every)
        if self.switch_every > 0:
            return RewardSchedule.negation(self.switch_every, self.num_phases)
        return STATIONARY

    def validate(self) -> "ExperimentConfig":
        _choose("experiment", self.experiment, EXPERIMENTS)
        for item in self.learners:
            _choose("learner", item, VALID_LEARNERS[self.experiment])
        if not self.learners:
            raise ValueError("learners must not be empty")
        _choose("eta_schedule", self.eta_schedule, ETA_SCHEDULES[self.experiment])
        _choose("space", self.space, dynamics.SPACES)
        if not self.seeds:
            raise ValueError("seeds must not be empty")
        for key in ("iterations", "eval_every", "record_every", "trajectories", "num_phases"):
            if getattr(self, key) < 1:
                raise ValueError(f"{key} must be >= 1, got {getattr(self, key)}")
        if self.eta_schedule == "constant" and (not self.etas or min(self.etas) <= 0):
            raise ValueError("etas must be non-empty and positive")
        if self.dt <= 0 or self.beta <= 0 or min(self.taus, default=0.0) < 0:
            raise ValueError("dt and beta must be positive, taus non-negative")
        game = load_game(self.game)
        if self.experiment == "pennies" and self.game not in ("matching_pennies", "matching_pennies:forfeit"):
            raise ValueError("the pennies experiment needs game matching_pennies[:forfeit]")
        if self.experiment == "dynamics" and not isinstance(game, MatrixGame):
            raise ValueError(f"dynamics needs a matrix game (rps:<nu> or matching_pennies), got {self.game!r}")
        self.schedule()
        return self


def _choose(what, value, options):
    if value not in options:
        raise ValueError(f"unknown {what} {value!r}; valid: {', '.join(map(str, options))}")


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _words(text: str) -> tuple:
    return tuple(w.strip() for w in str(text).split(",") if w.strip())


def _floats(text):
    return tuple(float(w) for w in _words(text))


def _ints(text):
    """``"0,2,5"`` or inclusive ranges such as ``"0-4"``."""
    out = []
    for w in _words(text):
        lo, sep, hi = w.partition("-")
        out.extend(range(int(lo), int(hi) + 1) if sep else [int(w)])
    return tuple(out)


_CONVERT = {
    "experiment": str, "name": str, "game": str, "learners": _words, "etas": _floats,
    "eta_schedule": str, "taus": _floats, "beta": float, "iterations": int, "seeds": _ints,
    "switch_every": int, "num_phases": int, "nus": _floats, "eval_every": int, "dt": float,
    "trajectories": int, "space": str, "record_every": int, "save_policy": _bool, "out_dir": str,
}
CONFIG_KEYS = tuple(f.name for f in dataclasses.fields(ExperimentConfig))
# spellings accepted in files as synonyms of the field names
ALIASES = {"learner": "learners", "algo": "learners", "field": "learners", "eta": "etas",
           "tau": "taus", "seed": "seeds", "iters": "iterations", "steps": "iterations",
           "policy_updates": "iterations", "rounds": "iterations"}


def parse_config_text(text: str) -> dict:
    """``key=value`` lines (``#`` comments) into a string mapping."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",),
                                       inline_comment_prefixes=("#",), delimiters=("=",))
    parser.optionxform = str
    parser.read_string("[config]\n" + text)
    return dict(parser["config"])


def load_config_file(path) -> dict:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def apply_overrides(config: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    """New config with ``overrides`` (strings or typed values) applied."""
    changes = {}
    for key, value in overrides.items():
        if value is None:
            continue
        field_name = ALIASES.get(key.replace("-", "_"), key.replace("-", "_"))
        if field_name not in _CONVERT:
            raise ValueError(f"unknown config key {key!r}; valid: {', '.join(CONFIG_KEYS)}")
        if isinstance(value, str):
            try:
                value = _CONVERT[field_name](value)
            except ValueError as exc:
                raise ValueError(f"bad value for {key}: {exc}") from None
        elif isinstance(value, list):
            value = tuple(value)
        changes[field_name] = value
    return dataclasses.replace(config, **changes)


PRESETS = {
    "pennies": {
        "experiment": "pennies", "game": "matching_pennies:forfeit", "learners": "hedge,neurd,spg",
        "eta_schedule": "sweep", "iterations": "100",
    },
    "rps-dynamics": {
        "experiment": "dynamics", "game": "rps:1", "learners": "rd,qpg", "dt": "0.1",
        "iterations": "1000", "trajectories": "5", "record_every": "10",
    },
    "biased-rps-average": {
        "experiment": "dynamics", "game": "rps:3", "learners": "rd,qpg", "dt": "0.1",
        "iterations": "10000", "trajectories": "20", "record_every": "100",
    },
    "nonstationary-rps": {
        "experiment": "dynamics", "game": "rps:20", "learners": "rd,qpg", "dt": "0.1",
        "iterations": "3000", "nus": "20,0,20", "switch_every": "1000", "trajectories": "20",
        "record_every": "10",
    },
    "cfr-kuhn": {
        "experiment": "cfr", "game": "kuhn", "learners": "neurd,hedge,spg", "etas": "1",
        "iterations": "1000", "eval_every": "10",
    },
    "cfr-leduc": {
        "experiment": "cfr", "game": "leduc", "learners": "neurd,spg",
        "etas": ",".join(str(e) for e in cfr.LEDUC_ETA_GRID), "iterations": "1000", "eval_every": "50",
    },
    "train-kuhn": {
        "experiment": "train", "game": "kuhn", "learners": "neurd,spg", "taus": "0,0.05,0.1",
        "iterations": "30000", "switch_every": "10000", "seeds": "0-4", "eval_every": "1000",
    },
    "train-leduc": {
        "experiment": "train", "game": "leduc", "learners": "neurd,spg", "taus": "0,0.05,0.1",
        "iterations": "3000", "switch_every": "1000", "seeds": "0-2", "eval_every": "250",
    },
    "train-goofspiel": {
        "experiment": "train", "game": "goofspiel5", "learners": "neurd,spg", "taus": "0,0.05,0.1",
        "iterations": "3000", "switch_every": "1000", "seeds": "0-2", "eval_every": "250",
    },
}


def preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; valid: {', '.join(PRESETS)}")
    return apply_overrides(ExperimentConfig(name=name), PRESETS[name])


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------


def bootstrap_ci(samples, resamples: int = 1000, level: float = 0.95, seed: int = 0):
    """Percentile bootstrap interval ``(low, high)`` for the mean."""
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise ValueError(f"need at least 2 samples, got {x.size}")
    if not 0 < level < 1:
        raise ValueError(f"level must be in (0, 1), got {level}")
    rng = np.random.default_rng(seed)
    means = x[rng.integers(0, len(x), size=(resamples, len(x)))].mean(axis=1)
    alpha = (1.0 - level) / 2.0
    low, high = np.quantile(means, [alpha, 1.0 - alpha])
    return float(low), float(high)


# ---------------------------------------------------------------------------
# Experiment bodies; each returns row tuples in CSV_COLUMNS order and a
# mapping of extra output file names to their text
# ---------------------------------------------------------------------------


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def run_pennies(config: ExperimentConfig, learner: str, seed: int) -> list:
    forfeit = config.game.endswith(":forfeit")
    T = config.iterations
    if config.eta_schedule == "sweep":
        steps = [learners.sweep_step_size(learner, T, learners.ETA_GRID, forfeit)[0]]
    elif config.eta_schedule == "anytime":
        steps = ["anytime"]
    else:
        steps = list(config.etas)
    rows = []
    for eta in steps:
        n_actions = 3 if forfeit else 2
        step = learners.anytime_step_size(n_actions) if eta == "anytime" else eta
        res = learners.run_repeated_game(learner, T, step, forfeit)
        for k, t in enumerate(res.rounds):
            for a in range(n_actions):
                rows.append((int(t), a, res.logits[k, a], res.policies[k, a], res.action_regrets[k, a],
                             learner, eta, forfeit))
    return rows, {}


def run_dynamics(config: ExperimentConfig, field: str, seed: int) -> list:
    base = load_game(config.game)
    schedule = config.schedule()
    rng = np.random.default_rng(seed)
    n_row, n_col = base.num_actions
    starts = [(dynamics.sample_simplex(rng, n_row), dynamics.sample_simplex(rng, n_col))
              for _ in range(config.trajectories)]
    bounds = [0, *[b for b in schedule.boundaries if b < config.iterations], config.iterations]
    rows = []
    for traj_id, pi0 in enumerate(starts):
        joint = list(pi0)
        for lo, hi in zip(bounds, bounds[1:]):
            game = apply_schedule(base, schedule, lo)
            traj = dynamics.euler_integrate(dynamics.MatrixField(game, field, config.space),
                                            joint, config.dt, hi - lo)
            # time averages restart with each phase; the first phase includes the start point
            pols = traj.policies if lo == 0 else traj.policies[1:]
            avg = np.cumsum(pols, axis=0) / np.arange(1, len(pols) + 1)[:, None, None]
            nc = dynamics.nashconv_series(game, avg)
            first = 0 if lo == 0 else lo + 1
            for i in range(len(pols)):
                step = first + i
                if step % config.record_every and step != config.iterations:
                    continue
                for p, n in enumerate((n_row, n_col)):
                    for a in range(n):
                        rows.append((traj_id, step, step * config.dt, p, a, pols[i, p, a],
                                     avg[i, p, a], nc[i]))
            joint = [traj.policies[-1, 0, :n_row], traj.policies[-1, 1, :n_col]]
    return rows, {}


def _tree(name: str) -> GameTree:
    game = load_game(name)
    return game.to_tree() if isinstance(game, MatrixGame) else game


def run_cfr(config: ExperimentConfig, learner: str, seed: int) -> list:
    game = _tree(config.game)
    if config.eta_schedule == "hedge":
        runs = [("hedge", cfr.hedge_schedule(game, config.iterations))]
    else:
        runs = [(eta, eta) for eta in config.etas]
    rows, files = [], {}
    for label, eta in runs:
        tables, records = cfr.run_cfr(game, learner, eta, config.iterations, config.eval_every,
                                      config.schedule())
        for r in records:
            rows.append((r["iter"], r["phase"], learner, label, r["nashconv"], r["regret_p0"],
                         r["regret_p1"], r["bound_p0"], r["bound_p1"]))
        if config.save_policy:
            name = f"{config.label}_{learner}_eta{label}_policy.txt"
            files[name] = format_policy_table(game, cfr.average_policy(tables))
    return rows, files


def run_train(config: ExperimentConfig, algo: str, seed: int) -> list:
    game = _tree(config.game)
    rows = []
    for tau in config.taus:
        tc = neural.TrainConfig(policy_updates=config.iterations, tau=tau, beta=config.beta,
                                eval_every=config.eval_every, seed=seed, schedule=config.schedule())
        for r in neural.train(game, algo, tc):
            rows.append((seed, r["update"], r["phase"], tau, r["nashconv"]))
    return rows, {}


RUNNERS = {"pennies": run_pennies, "dynamics": run_dynamics, "cfr": run_cfr, "train": run_train}
# experiments whose CSV rows carry the learner; the others get one file per learner
LEARNER_IN_ROWS = ("pennies", "cfr")


# ---------------------------------------------------------------------------
# Policy tables
# ---------------------------------------------------------------------------


def format_policy_table(game: GameTree, policy) -> str:
    """One line per information state: ``key p_1 ... p_k`` over legal actions."""
    lines = [" ".join([key, *(repr(p) for p in probs)])
             for key, probs in game.policy_to_dict(policy).items()]
    return "\n".join(lines) + "\n"


def write_policy_table(path, game: GameTree, policy) -> None:
    Path(path).write_text(format_policy_table(game, policy), encoding="utf-8")


def read_policy_table(path, game: GameTree) -> list:
    """Inverse of :func:`write_policy_table`; missing states are uniform."""
    table = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, *probs = line.replace(",", " ").split()
        game.lookup(key)
        try:
            values = [float(p) for p in probs]
        except ValueError:
            raise ValueError(f"{path}:{lineno}: probabilities must be numbers") from None
        if min(values, default=-1.0) < 0 or abs(sum(values) - 1.0) > 1e-6:
            raise ValueError(f"{path}:{lineno}: {key} probabilities must be >= 0 and sum to 1")
        table[key] = values
    missing = sum(len(t) for t in game.infostates) - len(table)
    if missing:
        log.warning("%d information states missing from %s; using uniform there", missing, path)
    return game.policy_from_dict(table)


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------


def _out_dir(config: ExperimentConfig) -> Path:
    return Path(config.out_dir) / config.label


def _job(args):
    config, learner, seed = args
    return RUNNERS[config.experiment](config, learner, seed)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows([_fmt(v) for v in row] for row in rows)


def summarize(experiment: str, groups: dict, bootstrap_seed: int = 0) -> list:
    """Summary rows ``(learner, *keys, metric, n, mean, ci_low, ci_high)``.

    ``groups`` maps a learner to the list of row tuples from every seed.
    Samples at one checkpoint are pooled over seeds (and trajectories).
    """
    metric, keys = SUMMARY_KEYS[experiment]
    cols = CSV_COLUMNS[experiment]
    m, ks = cols.index(metric), [cols.index(k) for k in keys]
    out = []
    for learner, rows in groups.items():
        if experiment == "dynamics":
            rows = [r for r in rows if r[3] == 0 and r[4] == 0]
        buckets: dict = {}
        for r in rows:
            buckets.setdefault(tuple(r[k] for k in ks), []).append(float(r[m]))
        for key, vals in buckets.items():
            lo, hi = bootstrap_ci(vals, seed=bootstrap_seed) if len(vals) >= 2 else ("", "")
            out.append((learner, *key, metric, len(vals), float(np.mean(vals)), lo, hi))
    return out


def run_experiment(config: ExperimentConfig, workers: int = 1) -> list:
    """Run every (learner, seed) job and write the CSV files; returns their paths.

    Files written by a failed run are removed before the error propagates.
    """
    config.validate()
    out = _out_dir(config)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(config, learner, seed) for learner in config.learners for seed in config.seeds]
    written: list = []
    try:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_job, jobs))
        else:
            results = [_job(j) for j in jobs]
        by_job = {(j[1], j[2]): res[0] for j, res in zip(jobs, results)}
        extra = {}
        for res in results:
            extra.update(res[1])
        header = CSV_COLUMNS[config.experiment]
        name = config.label
        for seed in config.seeds:
            if config.experiment in LEARNER_IN_ROWS:
                path = out / f"{name}_seed{seed}.csv"
                _write_csv(path, header, [r for lr in config.learners for r in by_job[lr, seed]])
                written.append(path)
            else:
                for lr in config.learners:
                    path = out / f"{name}_{lr}_seed{seed}.csv"
                    _write_csv(path, header, by_job[lr, seed])
                    written.append(path)
        groups = {lr: [r for s in config.seeds for r in by_job[lr, s]] for lr in config.learners}
        metric, keys = SUMMARY_KEYS[config.experiment]
        path = out / f"{name}_summary.csv"
        _write_csv(path, ("learner", *keys, "metric", "n", "mean", "ci_low", "ci_high"),
                   summarize(config.experiment, groups))
        written.append(path)
        for fname in sorted(extra):
            path = out / fname
            path.write_text(extra[fname], encoding="utf-8")
            written.append(path)
    except BaseException:
        for path in written:
            if os.path.exists(path):
                os.remove(path)
        raise
    return written
