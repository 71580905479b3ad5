import json
import math

import numpy as np
import pytest

from banditstop.cli import main
from banditstop.environments import PandoraAction
from banditstop.harness import (
    ConfigError,
    ExperimentConfig,
    adversarial_demo,
    execute,
    fit_loglog,
    load_instance,
    replicate_regrets,
    run_experiment,
)
from banditstop.oracle import one_round_regret, pandora_expected_utility, prophet_expected_reward, prophet_opt
from banditstop.trace import RegretTrace

FOOTNOTE = "atoms= 0.25:0.5,0.75:0.5\natoms= 0.5:1\n"
UNIFORM_ATOM = "segments= 0:1:1\natoms= 0.3:0.5,0.9:0.5\n"
PANDORA_PAIR = "segments= 0:1:1 ; cost= 0.02\natoms= 0.25:0.5,0.75:0.5 ; cost= 0.05\n"


def test_config_validation():
    for bad in ({"problem": "bandit"}, {"learner": "greedy"}, {"preset": "huge"}, {"horizon": 1}, {"fmt": "xml"}):
        with pytest.raises(ConfigError):
            ExperimentConfig(**bad)
    with pytest.raises(ValueError):
        ExperimentConfig(feedback="everything")
    cfg = ExperimentConfig(c_init=2.0)
    assert cfg.constant("c_init") == 2.0 and cfg.constant("c_explore") == 4.0
    assert ExperimentConfig(preset="paper", problem="pandora-fixed").constant("c_est") == 1000.0
    assert ExperimentConfig.from_dict(json.loads(cfg.to_json())) == cfg


def test_load_instance_rules():
    with pytest.raises(ConfigError):
        load_instance(ExperimentConfig())
    with pytest.raises(ConfigError):
        load_instance(ExperimentConfig(problem="prophet", instance_text=PANDORA_PAIR))
    with pytest.raises(ConfigError):
        load_instance(ExperimentConfig(problem="pandora", instance_text=FOOTNOTE))
    # box 1 has the larger reservation value, so the order (0, 1) is not optimal
    swapped = "segments= 0:1:1 ; cost= 0.125\nsegments= 0:1:1 ; cost= 0.02\n"
    with pytest.raises(ConfigError, match="reservation"):
        load_instance(ExperimentConfig(problem="pandora-fixed", instance_text=swapped))


def test_same_config_same_trace():
    cfg = ExperimentConfig(problem="prophet", instance_text=UNIFORM_ATOM, horizon=2**13, seed=3)
    a, b = run_experiment(cfg), run_experiment(cfg)
    assert a.equals(b) and len(a) == 2**13
    c = run_experiment(cfg.replace(seed=4))
    assert not np.array_equal(a.reward, c.reward)


def test_optimal_baseline_has_zero_regret():
    for problem, text in (("prophet", UNIFORM_ATOM), ("pandora", PANDORA_PAIR)):
        trace = run_experiment(ExperimentConfig(problem=problem, instance_text=text, horizon=500, learner="optimal"))
        assert trace.total_regret == pytest.approx(0.0, abs=1e-12)


def test_footnote_fixed_threshold_regret_is_exact():
    T = 4000
    trace = run_experiment(ExperimentConfig(instance_text=FOOTNOTE, horizon=T, learner="fixed", action="0.9"))
    assert trace.total_regret == 0.125 * T
    with pytest.raises(ConfigError):
        execute(ExperimentConfig(instance_text=FOOTNOTE, learner="fixed"))


def test_regret_recomputed_from_action_log():
    text = "atoms= 0.2:0.5,0.8:0.5\natoms= 0.1:0.25,0.6:0.75\natoms= 0.5:1\n"
    trace = run_experiment(ExperimentConfig(instance_text=text, horizon=2**16, seed=1))
    inst = load_instance(ExperimentConfig(instance_text=text))
    from banditstop.environments import ProphetAction

    opt = prophet_opt(inst)[0]
    values = {a: prophet_expected_reward(inst, ProphetAction.from_key(a)) for a in set(trace.action)}
    recomputed = len(trace) * opt - sum(values[a] for a in trace.action)
    assert trace.total_regret == pytest.approx(recomputed, abs=1e-9)


def test_scaled_pandora_logs_unscaled_units():
    cfg = ExperimentConfig(problem="pandora", instance_text=PANDORA_PAIR, horizon=2**14, seed=2)
    res = execute(cfg)
    inst = load_instance(cfg)
    rewards = []
    for b in res.session.blocks:
        act = PandoraAction.from_key(b.action)
        assert b.regret == pytest.approx(one_round_regret(inst, act), abs=1e-12)
        rewards.append((b.rewards, pandora_expected_utility(inst, act)))
    # observed rewards are reported on the original scale
    got = np.concatenate([r for r, _ in rewards])
    want = np.concatenate([np.full(len(r), v) for r, v in rewards])
    assert abs(got.mean() - want.mean()) < 0.02


def test_fit_loglog():
    hs = [2**k for k in range(10, 16)]
    lin = fit_loglog(hs, [[0.1 * T] * 3 for T in hs])
    assert lin.slope == pytest.approx(1.0) and lin.flags == []
    root = fit_loglog(hs, [[3 * math.sqrt(T)] for T in hs])
    assert root.slope == pytest.approx(0.5)
    zero = fit_loglog(hs, [[0.0] for _ in hs])
    assert zero.flags == ["degenerate", "offset"] and zero.slope == pytest.approx(0.0)
    with pytest.raises(ValueError):
        fit_loglog(hs[:3], [[1.0]] * 3)
    assert [r["horizon"] for r in lin.rows()] == hs


def test_linear_baseline_sweep_slope_is_one():
    cfg = ExperimentConfig(instance_text=FOOTNOTE, learner="fixed", action="0.9")
    hs = [1000, 2000, 4000, 8000]
    fit = fit_loglog(hs, [replicate_regrets(cfg.replace(horizon=T), 2) for T in hs])
    assert fit.slope == pytest.approx(1.0, abs=1e-12)


def test_replicates_use_consecutive_seeds():
    cfg = ExperimentConfig(instance_text=UNIFORM_ATOM, horizon=2**12, seed=7)
    regs = replicate_regrets(cfg, 2)
    assert regs == [execute(cfg).total_regret, execute(cfg.replace(seed=8)).total_regret]
    assert replicate_regrets(cfg, 2, workers=2) == regs


def test_adversarial_demo_short():
    rep = adversarial_demo("prophet", 2000, seed=1)
    assert rep.rounds == 2000 and rep.hindsight_mean > rep.learner_mean
    with pytest.raises(ConfigError):
        adversarial_demo("knapsack", 100)


# -- CLI -----------------------------------------------------------------------


@pytest.fixture
def files(tmp_path, monkeypatch):
    monkeypatch.setenv("BANDITSTOP_OUTDIR", str(tmp_path))
    paths = {}
    for name, text in (("footnote", FOOTNOTE), ("ua", UNIFORM_ATOM), ("pair", PANDORA_PAIR)):
        p = tmp_path / f"{name}.txt"
        p.write_text(text)
        paths[name] = str(p)
    return tmp_path, paths


def test_cli_run_prophet_writes_trace_to_outdir(files, capsys):
    out, paths = files
    assert main(["run-prophet", "--instance", paths["ua"], "--horizon", "3000", "--seed", "2"]) == 0
    trace = RegretTrace.parse(out / "prophet-seed2.csv")
    assert len(trace) == 3000
    assert (out / "prophet-seed2.csv").read_text().splitlines()[0] == "t,phase,epsilon,action,reward,regret,cum_regret,flags"
    assert "total_regret=" in capsys.readouterr().out


def test_cli_run_pandora_variants(files):
    out, paths = files
    assert main(["run-pandora", "--instance", paths["pair"], "--horizon", "2000", "--format", "jsonl", "--snapshots", str(out / "snap.jsonl")]) == 0
    assert len(RegretTrace.parse(out / "pandora-seed0.jsonl", "jsonl")) == 2000
    assert main(["run-pandora", "--instance", paths["pair"], "--horizon", "2000", "--fixed-order", "--out", str(out / "f.csv")]) == 0
    assert len(RegretTrace.parse(out / "f.csv")) == 2000


def test_cli_oracle(files, capsys):
    _, paths = files
    assert main(["oracle", "--instance", paths["footnote"], "--action", "0.9"]) == 0
    text = capsys.readouterr().out
    assert "optimal_value=0.625" in text and "regret=0.125" in text
    assert main(["oracle", "--instance", paths["pair"]]) == 0
    assert "optimal_action=0>1@" in capsys.readouterr().out


def test_cli_sweep_and_adversarial(files, capsys):
    out, paths = files
    args = ["sweep", "--instance", paths["footnote"], "--learner", "fixed", "--action", "0.9",
            "--horizons", "100,200,400,800", "--replicates", "2", "--workers", "1"]
    assert main(args) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["slope"] == pytest.approx(1.0) and (out / "sweep-prophet.csv").exists()
    assert main(["adversarial-demo", "--horizon", "500"]) == 0
    assert json.loads(capsys.readouterr().out)["rounds"] == 500


def test_cli_reports_errors(files, capsys):
    _, paths = files
    assert main(["run-pandora", "--instance", paths["footnote"], "--horizon", "100"]) == 2
    assert "error:" in capsys.readouterr().err
    assert main(["oracle", "--instance", "/nonexistent"]) == 2
