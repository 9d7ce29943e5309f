"""Command-line entry point.

Examples::

    neurd pennies --preset pennies
    neurd --out-dir out dynamics --preset biased-rps-average
    neurd cfr --game kuhn --learner neurd,hedge --eta 1 --iters 1000 --save-policy
    neurd --seed 3 train --game kuhn --algo neurd --tau 0.1 --policy-updates 2000
    neurd eval --game kuhn --policy out/cfr/cfr_neurd_eta1.0_policy.txt
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import experiments
from .evaluation import nashconv
from .games import GAME_NAMES, MatrixGame, load_game

log = logging.getLogger(__name__)


def _schedule_flag(text: str) -> dict:
    """``stationary`` or ``negate:<every>[:<phases>]``."""
    if text == "stationary":
        return {"switch_every": "0"}
    parts = text.split(":")
    if parts[0] != "negate" or len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError("expected 'stationary' or 'negate:<every>[:<phases>]'")
    out = {"switch_every": parts[1]}
    if len(parts) == 3:
        out["num_phases"] = parts[2]
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="neurd",
                                     description="NeuRD, Hedge, SPG, replicator dynamics and CFR on small games.",
                                     epilog=__doc__.split("\n", 1)[1],
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--seed", type=int, help="seed for experiments without an explicit seed list")
    parser.add_argument("--workers", type=int, default=1, help="parallel jobs (default 1)")
    parser.add_argument("--out-dir", help="output directory (default ./results)")
    parser.add_argument("--config", help="key=value config file, applied after --preset")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def experiment(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--preset", choices=sorted(experiments.PRESETS), help="named preset to start from")
        p.add_argument("--name", help="experiment label used in file names")
        return p

    p = experiment("pennies", "repeated matching pennies against a scripted opponent")
    p.add_argument("--learner", help=f"comma list of {', '.join(experiments.VALID_LEARNERS['pennies'])}")
    p.add_argument("--eta", help="comma list of step sizes, or 'sweep' / 'anytime'")
    p.add_argument("--rounds", help="horizon T")
    p.add_argument("--forfeit", action="store_true", default=None, help="add the forfeit action")

    p = experiment("dynamics", "Euler-integrated RD / QPG on a matrix game")
    p.add_argument("--game", help="rps:<nu> or matching_pennies")
    p.add_argument("--field", help="comma list of rd, qpg")
    p.add_argument("--dt")
    p.add_argument("--steps")
    p.add_argument("--trajectories", help="random starts per seed")
    p.add_argument("--space", choices=["logit", "policy"])
    p.add_argument("--nus", help="comma list of RPS biases, one per phase")
    p.add_argument("--switch-every")
    p.add_argument("--record-every")

    p = experiment("cfr", "counterfactual regret minimisation with a local learner")
    p.add_argument("--game", help=", ".join(GAME_NAMES))
    p.add_argument("--learner", help="comma list of neurd, hedge, spg")
    p.add_argument("--eta", help="comma list of constant step sizes")
    p.add_argument("--eta-schedule", choices=["constant", "hedge"])
    p.add_argument("--iters")
    p.add_argument("--eval-every")
    p.add_argument("--schedule", type=_schedule_flag, help="stationary or negate:<every>[:<phases>]")
    p.add_argument("--save-policy", action="store_true", default=None,
                   help="also write the average policy table of every run")

    p = experiment("train", "neural actor-critic NeuRD / SPG")
    p.add_argument("--game", help="kuhn, leduc or goofspiel5")
    p.add_argument("--algo", help="comma list of neurd, spg")
    p.add_argument("--tau", help="comma list of entropy levels")
    p.add_argument("--beta")
    p.add_argument("--seeds", help="e.g. 0-4 or 0,3,7")
    p.add_argument("--policy-updates")
    p.add_argument("--switch-every", help="negate the rewards every this many updates")
    p.add_argument("--eval-every")

    p = sub.add_parser("eval", help="NashConv of a policy table")
    p.add_argument("--game", required=True)
    p.add_argument("--policy", required=True, help="text file: one line per key with its probabilities")
    p.add_argument("--output", help="optional CSV report (player, br_value, expected_value, gain)")
    return parser


_FLAG_KEYS = {
    "pennies": {"learner": "learners", "eta": "etas", "rounds": "iterations"},
    "dynamics": {"game": "game", "field": "learners", "dt": "dt", "steps": "iterations",
                 "trajectories": "trajectories", "space": "space", "nus": "nus",
                 "switch_every": "switch_every", "record_every": "record_every"},
    "cfr": {"game": "game", "learner": "learners", "eta": "etas", "eta_schedule": "eta_schedule",
            "iters": "iterations", "eval_every": "eval_every", "save_policy": "save_policy"},
    "train": {"game": "game", "algo": "learners", "tau": "taus", "beta": "beta", "seeds": "seeds",
              "policy_updates": "iterations", "switch_every": "switch_every", "eval_every": "eval_every"},
}


def config_from_args(args) -> experiments.ExperimentConfig:
    """Preset, then config file, then flags; later layers win."""
    kind = args.command
    config = experiments.preset(args.preset) if args.preset else experiments.ExperimentConfig(experiment=kind)
    if args.config:
        config = experiments.apply_overrides(config, experiments.load_config_file(args.config))
    if config.experiment != kind:
        raise ValueError(f"config is for experiment {config.experiment!r}, not {kind!r}")
    flags = {}
    for flag, key in _FLAG_KEYS[kind].items():
        value = getattr(args, flag)
        if value is not None:
            flags[key] = value if isinstance(value, str) else str(value).lower()
    if kind == "pennies" and args.eta in ("sweep", "anytime"):
        flags.pop("etas")
        flags["eta_schedule"] = args.eta
    elif kind == "pennies" and args.eta is not None:
        flags["eta_schedule"] = "constant"
    if kind == "pennies" and args.forfeit:
        flags["game"] = "matching_pennies:forfeit"
    if kind == "cfr" and args.schedule:
        flags.update(args.schedule)
    if args.name:
        flags["name"] = args.name
    if args.out_dir:
        flags["out_dir"] = args.out_dir
    explicit_seeds = kind == "train" and args.seeds is not None
    if args.seed is not None and not explicit_seeds:
        flags["seeds"] = str(args.seed)
    return experiments.apply_overrides(config, flags).validate()


def run_eval(args) -> int:
    game = load_game(args.game)
    if isinstance(game, MatrixGame):
        game = game.to_tree()
    policy = experiments.read_policy_table(args.policy, game)
    report = nashconv(game, policy, "table")
    for k in range(2):
        print(f"player {k}: best response {report.br_values[k]:.6f}, "
              f"expected {report.expected_values[k]:.6f}, gain {report.gains[k]:.6f}")
    print(f"nashconv {report.nashconv:.6f}")
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("player", "br_value", "expected_value", "gain"))
            for k in range(2):
                writer.writerow((k, repr(report.br_values[k]), repr(report.expected_values[k]),
                                 repr(report.gains[k])))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.workers < 1:
        parser.error("--workers must be >= 1")
    try:
        if args.command == "eval":
            return run_eval(args)
        config = config_from_args(args)
        for path in experiments.run_experiment(config, workers=args.workers):
            print(Path(path))
    except (ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        parser.exit(2, f"neurd {args.command}: error: {msg}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
