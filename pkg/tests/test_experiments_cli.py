import csv
import math
from collections import defaultdict

import numpy as np
import pytest

from neurd import cli, experiments
from neurd.experiments import ExperimentConfig, apply_overrides, bootstrap_ci, parse_config_text, run_experiment
from neurd.games import kuhn_game


def small(name, **over):
    return apply_overrides(experiments.preset(name), {k: str(v) for k, v in over.items()})


def read_rows(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def test_bootstrap_ci_properties():
    assert bootstrap_ci([2.5] * 10) == (2.5, 2.5)
    lo, hi = bootstrap_ci([0.0, 1.0] * 500)
    assert lo < 0.5 < hi
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = rng.normal(size=rng.integers(2, 30))
        lo, hi = bootstrap_ci(x, seed=3)
        assert x.min() <= lo <= hi <= x.max()
        assert bootstrap_ci(x, seed=3) == (lo, hi)
    with pytest.raises(ValueError):
        bootstrap_ci([1.0])
    with pytest.raises(ValueError):
        bootstrap_ci([1.0, 2.0], level=1.5)


def test_config_parsing_and_overrides():
    parsed = parse_config_text("# comment\nexperiment = cfr\ngame=leduc\neta = 0.5,1  # inline\nseeds=0-2\n")
    cfg = apply_overrides(ExperimentConfig(), parsed)
    assert cfg.game == "leduc" and cfg.etas == (0.5, 1.0) and cfg.seeds == (0, 1, 2)
    with pytest.raises(ValueError, match="valid: .*iterations"):
        apply_overrides(cfg, {"horizon": "10"})
    with pytest.raises(ValueError, match="bad value"):
        apply_overrides(cfg, {"iterations": "ten"})
    with pytest.raises(ValueError, match="valid"):
        apply_overrides(cfg, {"learners": "regret-matching"}).validate()
    with pytest.raises(ValueError):
        apply_overrides(cfg, {"seeds": ""}).validate()
    with pytest.raises(ValueError):
        apply_overrides(cfg, {"eval_every": "0"}).validate()
    with pytest.raises(ValueError):
        experiments.preset("cfr-goofspiel")


def test_every_preset_is_valid():
    assert set(experiments.PRESETS) == {"pennies", "rps-dynamics", "biased-rps-average", "nonstationary-rps",
                                       "cfr-kuhn", "cfr-leduc", "train-kuhn", "train-leduc", "train-goofspiel"}
    for name in experiments.PRESETS:
        assert experiments.preset(name).validate().label == name


def test_policy_table_round_trip(tmp_path, caplog):
    g = kuhn_game()
    pol = [np.random.default_rng(p).dirichlet([1, 1], size=6) for p in range(2)]
    path = tmp_path / "pol.txt"
    experiments.write_policy_table(path, g, pol)
    back = experiments.read_policy_table(path, g)
    for a, b in zip(pol, back):
        np.testing.assert_array_equal(a, b)
    path.write_text("J: 0.3 0.7\n")
    part = experiments.read_policy_table(path, g)
    assert part[0][0].tolist() == [0.3, 0.7] and part[1][0].tolist() == [0.5, 0.5]
    assert "missing" in caplog.text
    path.write_text("J: 0.3 0.8\n")
    with pytest.raises(ValueError, match="sum to 1"):
        experiments.read_policy_table(path, g)
    path.write_text("Z:pp 0.5 0.5\n")
    with pytest.raises(KeyError):
        experiments.read_policy_table(path, g)


@pytest.mark.parametrize("name,over", [
    ("pennies", {"iterations": 100}),
    ("cfr-kuhn", {"iterations": 60, "eval_every": 20, "switch_every": 25}),
    ("nonstationary-rps", {"iterations": 300, "switch_every": 100, "trajectories": 3}),
    ("train-kuhn", {"iterations": 40, "switch_every": 20, "eval_every": 10, "seeds": "0,1", "taus": "0.1"}),
])
def test_determinism_and_columns(tmp_path, name, over):
    cfg = small(name, **over)
    a = run_experiment(apply_overrides(cfg, {"out_dir": str(tmp_path / "a")}))
    b = run_experiment(apply_overrides(cfg, {"out_dir": str(tmp_path / "b")}))
    assert [p.name for p in a] == [p.name for p in b]
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()
    raw = [p for p in a if p.suffix == ".csv" and not p.name.endswith("_summary.csv")]
    assert raw
    for p in raw:
        with open(p, encoding="utf-8") as fh:
            assert tuple(next(csv.reader(fh))) == experiments.CSV_COLUMNS[cfg.experiment]


def test_phase_column_consistent_with_schedule(tmp_path):
    cfg = small("cfr-kuhn", iterations=90, eval_every=10, switch_every=30, learners="neurd",
                out_dir=tmp_path)
    sched = cfg.schedule()
    rows = read_rows(run_experiment(cfg)[0])
    assert {r["phase"] for r in rows} == {"0", "1", "2"}
    for r in rows:
        assert int(r["phase"]) == sched.phase_index(int(r["iter"]) - 1)
    cfg = small("nonstationary-rps", iterations=300, switch_every=100, trajectories=2, out_dir=tmp_path)
    for path in run_experiment(cfg):
        if "summary" in path.name:
            continue
        steps = sorted({int(r["step"]) for r in read_rows(path)})
        # the checkpoints include every phase boundary
        assert {0, 100, 200, 300} <= set(steps) and steps[-1] == 300


def independent_ci(values, resamples=1000, level=0.95, seed=0):
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(values), size=(resamples, len(values)))
    means = sorted(math.fsum(values[i] for i in row) / len(values) for row in idx)
    q = np.quantile(np.array(means), [(1 - level) / 2, 1 - (1 - level) / 2])
    return float(q[0]), float(q[1])


def test_summary_matches_independent_recomputation(tmp_path):
    cfg = small("train-kuhn", iterations=40, switch_every=20, eval_every=10, seeds="0,1,2", taus="0,0.1",
                out_dir=tmp_path)
    paths = run_experiment(cfg)
    groups = defaultdict(list)
    for p in paths:
        if p.name.endswith("_summary.csv"):
            continue
        algo = p.name.split("_")[1]
        for r in read_rows(p):
            groups[algo, r["tau"], r["update"], r["phase"]].append(float(r["nashconv"]))
    summary = read_rows(paths[-1] if paths[-1].name.endswith("_summary.csv")
                        else next(p for p in paths if p.name.endswith("_summary.csv")))
    assert len(summary) == len(groups)
    for row in summary:
        vals = groups[row["learner"], row["tau"], row["update"], row["phase"]]
        assert int(row["n"]) == len(vals) == 3
        assert abs(float(row["mean"]) - math.fsum(vals) / len(vals)) <= 1e-12
        lo, hi = independent_ci(vals)
        assert abs(float(row["ci_low"]) - lo) <= 1e-12 and abs(float(row["ci_high"]) - hi) <= 1e-12


def test_single_seed_summary_has_blank_interval(tmp_path):
    cfg = small("cfr-kuhn", iterations=20, eval_every=10, out_dir=tmp_path)
    summary = read_rows(run_experiment(cfg)[-1])
    assert all(r["n"] == "1" and r["ci_low"] == "" for r in summary)


def test_partial_output_removed_on_failure(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise RuntimeError("summary failed")
    monkeypatch.setattr(experiments, "summarize", boom)
    cfg = small("cfr-kuhn", iterations=20, eval_every=10, out_dir=tmp_path)
    with pytest.raises(RuntimeError):
        run_experiment(cfg)
    assert not any((tmp_path / "cfr-kuhn").iterdir())


def test_cli_errors_exit_with_diagnostic(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--out-dir", str(tmp_path), "cfr", "--game", "chess"])
    assert exc.value.code == 2
    assert "valid" in capsys.readouterr().err
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("experiment=cfr\nlearning_rate=3\n")
    with pytest.raises(SystemExit) as exc:
        cli.main(["--config", str(cfg), "cfr"])
    err = capsys.readouterr().err
    assert exc.value.code == 2 and "learning_rate" in err and "etas" in err
    with pytest.raises(SystemExit) as exc:
        cli.main(["cfr", "--schedule", "sometimes"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["--workers", "0", "cfr"])
    assert exc.value.code == 2


def test_cli_layers_preset_config_and_flags(tmp_path):
    cfg_file = tmp_path / "c.cfg"
    cfg_file.write_text("iterations=50\neval_every=5\n")
    args = cli.build_parser().parse_args(["--seed", "4", "--config", str(cfg_file), "cfr", "--preset",
                                          "cfr-kuhn", "--eval-every", "25", "--schedule", "negate:20:2"])
    cfg = cli.config_from_args(args)
    assert cfg.iterations == 50 and cfg.eval_every == 25 and cfg.seeds == (4,)
    assert cfg.switch_every == 20 and cfg.num_phases == 2 and cfg.learners == ("neurd", "hedge", "spg")


def test_cli_cfr_then_eval_round_trip(tmp_path, capsys):
    code = cli.main(["--out-dir", str(tmp_path), "cfr", "--game", "kuhn", "--learner", "neurd", "--eta", "1",
                     "--iters", "200", "--eval-every", "100", "--save-policy"])
    assert code == 0
    printed = capsys.readouterr().out.split()
    policy = next(p for p in printed if p.endswith("_policy.txt"))
    final = float(read_rows(next(p for p in printed if p.endswith("_seed0.csv")))[-1]["nashconv"])
    report = tmp_path / "report.csv"
    assert cli.main(["eval", "--game", "kuhn", "--policy", policy, "--output", str(report)]) == 0
    out = capsys.readouterr().out
    assert f"nashconv {final:.6f}" in out
    rows = read_rows(report)
    assert math.fsum(float(r["gain"]) for r in rows) == pytest.approx(final, abs=1e-12)
