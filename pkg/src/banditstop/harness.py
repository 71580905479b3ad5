"""Experiment runner: wires instance, environment, learner and oracle regret.

A config plus the code version determines the trace byte for byte: every
random draw comes from the environment's seeded stream and the learners
are deterministic given their rewards.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distributions import parse_instance_text
from .environments import (
    ABOVE,
    AdversarialPandoraEnv,
    AdversarialProphetEnv,
    FeedbackModel,
    PandoraAction,
    PandoraEnv,
    PandoraInstance,
    ProphetAction,
    ProphetEnv,
    ProphetInstance,
    format_threshold,
)
from .oracle import one_round_regret, prophet_opt, weitzman
from .pandora_learner import PandoraFixedOrderLearner, PandoraLearner
from .prophet_learner import ProphetLearner
from .trace import RegretTrace, Session

PROBLEMS = ("prophet", "pandora", "pandora-fixed")
LEARNERS = ("bandit", "optimal", "fixed")

PRESETS = {
    "desk": {"c_init": 4.0, "c_explore": 4.0, "c_est": 64.0, "c_est_fixed": 64.0},
    "paper": {"c_init": 1000.0, "c_explore": 1000.0, "c_est": 1e5, "c_est_fixed": 1000.0},
}


class ConfigError(ValueError):
    """The config asks for something the instance or oracle cannot provide."""


@dataclass
class ExperimentConfig:
    problem: str = "prophet"
    instance: str | None = None  # path to an instance file
    instance_text: str | None = None  # inline instance, used when no path is given
    horizon: int = 10_000
    seed: int = 0
    preset: str = "desk"
    c_init: float | None = None
    c_explore: float | None = None
    c_est: float | None = None
    feedback: str = "value"
    mode: str = "exact"
    learner: str = "bandit"
    action: str | None = None  # action key for the fixed learner
    replicates: int = 1
    out: str | None = None
    fmt: str = "csv"
    snapshots: str | None = None

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.learner not in LEARNERS:
            raise ConfigError(f"unknown learner {self.learner!r}")
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}")
        if self.mode not in ("exact", "approx"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.fmt not in ("csv", "jsonl"):
            raise ConfigError(f"unknown format {self.fmt!r}")
        FeedbackModel(self.feedback)
        if self.horizon < 2:
            raise ConfigError("horizon must be at least 2")

    def constant(self, name: str) -> float:
        val = getattr(self, name, None)
        if val is not None:
            return float(val)
        key = "c_est_fixed" if name == "c_est" and self.problem == "pandora-fixed" else name
        return PRESETS[self.preset][key]

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(**d)

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)


def load_instance(cfg: ExperimentConfig):
    if cfg.instance:
        with open(cfg.instance) as fh:
            text = fh.read()
    elif cfg.instance_text:
        text = cfg.instance_text
    else:
        raise ConfigError("no instance given")
    dists, costs = parse_instance_text(text)
    if cfg.problem == "prophet":
        if costs is not None:
            raise ConfigError("prophet instances carry no costs")
        return ProphetInstance(tuple(dists))
    if costs is None:
        raise ConfigError("Pandora instances need a cost on every box")
    inst = PandoraInstance(tuple(dists), tuple(costs))
    if cfg.problem == "pandora-fixed":
        if inst.n != 2:
            raise ConfigError("the fixed-order problem has exactly two boxes")
        sigma = [d.reservation_value(c) for d, c in zip(inst.dists, inst.costs)]
        if sigma[0] < sigma[1]:
            raise ConfigError("fixed order (0, 1) is only optimal when box 0 has the larger reservation value")
    return inst


def _unscale_key(action: PandoraAction, k: float) -> str:
    # a threshold above every possible value never stops the search, same as ABOVE
    order = ">".join(str(i) for i in action.order)
    th = [ABOVE if t == ABOVE or t * k > 1.0 else t * k for t in action.thresholds]
    return order + "@" + ";".join(format_threshold(t) for t in th)


def build_session(cfg: ExperimentConfig, inst, budget=-1):
    """Environment and session for the config; the general Pandora learner
    runs on the instance scaled by 1/(2n)."""
    fb = FeedbackModel(cfg.feedback)
    if cfg.problem == "prophet":
        env = ProphetEnv(inst, seed=cfg.seed, feedback=fb)
        return Session(env, cfg.horizon, budget, lambda a: one_round_regret(inst, a)), inst
    if cfg.problem == "pandora" and cfg.learner == "bandit":
        k = 2.0 * inst.n
        scaled = inst.scaled(1.0 / k)
        env = PandoraEnv(scaled, seed=cfg.seed, feedback=fb)
        regret = lambda a: k * one_round_regret(scaled, a)
        return Session(env, cfg.horizon, budget, regret, reward_scale=k, key_fn=lambda a: _unscale_key(a, k)), scaled
    env = PandoraEnv(inst, seed=cfg.seed, feedback=fb)
    return Session(env, cfg.horizon, budget, lambda a: one_round_regret(inst, a)), inst


def optimal_action(inst):
    if isinstance(inst, ProphetInstance):
        return ProphetAction(prophet_opt(inst)[1])
    return weitzman(inst)[0]


def _parse_action(cfg: ExperimentConfig, inst):
    if not cfg.action:
        raise ConfigError("the fixed learner needs an action")
    cls = ProphetAction if cfg.problem == "prophet" else PandoraAction
    action = cls.from_key(cfg.action)
    action.validate(inst.n)
    return action


def make_learner(cfg: ExperimentConfig, inst):
    c_init, c_explore, c_est = cfg.constant("c_init"), cfg.constant("c_explore"), cfg.constant("c_est")
    if cfg.problem == "prophet":
        return ProphetLearner(inst.n, c_init, c_explore)
    if cfg.problem == "pandora-fixed":
        return PandoraFixedOrderLearner(inst.costs, c_init, c_explore, c_est)
    return PandoraLearner(inst.costs, c_init, c_explore, c_est, cfg.mode)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    session: Session
    state: object = None
    learner: object = None

    @property
    def total_regret(self) -> float:
        return self.session.total_regret()

    def trace(self) -> RegretTrace:
        tr = self.session.trace()
        tr.meta = {"config": json.loads(self.config.to_json()), "events": self.session.events}
        return tr


def execute(cfg: ExperimentConfig) -> ExperimentResult:
    """Run one experiment and keep the session (blocks, events) around."""
    inst = load_instance(cfg)
    session, played = build_session(cfg, inst)
    if cfg.learner == "bandit":
        learner = make_learner(cfg, played)
        state = learner.run(session)
        return ExperimentResult(cfg, session, state, learner)
    action = optimal_action(inst) if cfg.learner == "optimal" else _parse_action(cfg, inst)
    session.play(action, cfg.horizon, cfg.learner)
    return ExperimentResult(cfg, session, action)


def run_experiment(cfg: ExperimentConfig) -> RegretTrace:
    """Run one experiment, write the requested files, and return the trace."""
    result = execute(cfg)
    trace = result.trace()
    if cfg.out:
        trace.emit(cfg.out, cfg.fmt)
    if cfg.snapshots:
        write_snapshots(result.session.events, cfg.snapshots)
    return trace


def write_snapshots(events, path) -> None:
    def clean(x):
        if isinstance(x, float) and not math.isfinite(x):
            return str(x)
        if isinstance(x, (list, tuple)):
            return [clean(v) for v in x]
        if isinstance(x, dict):
            return {k: clean(v) for k, v in x.items()}
        return x

    with open(path, "w") as fh:
        for e in events:
            fh.write(json.dumps(clean(e)) + "\n")


# -- sweeps ------------------------------------------------------------------


def _replicate_regret(cfg_dict: dict) -> float:
    return execute(ExperimentConfig.from_dict(cfg_dict)).total_regret


def replicate_regrets(cfg: ExperimentConfig, replicates: int, workers: int = 1) -> list[float]:
    """Total regret of replicates seeded base_seed + index."""
    jobs = [dataclasses.asdict(cfg.replace(seed=cfg.seed + r, out=None, snapshots=None)) for r in range(replicates)]
    if workers <= 1:
        return [_replicate_regret(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_replicate_regret, jobs))


@dataclass
class FitResult:
    slope: float
    intercept: float
    residuals: list
    table: list  # (horizon, mean regret, std, replicates)
    flags: list = field(default_factory=list)

    def rows(self):
        for (T, mean, sd, k), res in zip(self.table, self.residuals):
            yield {"horizon": T, "mean_regret": mean, "std_regret": sd, "replicates": k, "residual": res}


def fit_loglog(horizons, regrets) -> FitResult:
    """Least-squares slope of ln(mean regret) against ln(T).

    Nonpositive mean regret anywhere switches every point to regret + 1
    (flagged ``offset``); a sweep with no positive regret at all is
    flagged ``degenerate``.
    """
    horizons = list(horizons)
    if len(horizons) < 4:
        raise ValueError("need at least four horizons")
    means = np.array([np.mean(r) for r in regrets], dtype=float)
    flags = []
    if np.all(means <= 0):
        flags.append("degenerate")
    y = means
    if np.any(means <= 0):
        flags.append("offset")
        y = np.maximum(means, 0.0) + 1.0
    x = np.log(np.asarray(horizons, dtype=float))
    ly = np.log(y)
    slope, intercept = np.polyfit(x, ly, 1)
    residuals = (ly - (slope * x + intercept)).tolist()
    table = [(int(T), float(np.mean(r)), float(np.std(r)), len(r)) for T, r in zip(horizons, regrets)]
    return FitResult(float(slope), float(intercept), residuals, table, flags)


def sweep_and_fit(cfg: ExperimentConfig, horizons, replicates: int | None = None, workers: int = 1) -> FitResult:
    reps = replicates or cfg.replicates
    regrets = [replicate_regrets(cfg.replace(horizon=int(T)), reps, workers) for T in horizons]
    return fit_loglog(horizons, regrets)


def default_workers() -> int:
    return max(1, min(8, os.cpu_count() or 1))


# -- lower-bound demonstrations ----------------------------------------------------


@dataclass
class AdversarialReport:
    problem: str
    horizon: int
    seed: int
    hindsight_mean: float
    learner_mean: float
    rounds: int


def adversarial_demo(problem: str, horizon: int, seed: int = 0, c_init: float = 4.0, c_explore: float = 4.0) -> AdversarialReport:
    """Mean per-round reward of the best fixed action in hindsight versus the learner.

    Both face the same oblivious sequence (same seed).
    """
    if problem == "prophet":
        make = lambda: AdversarialProphetEnv(horizon, seed)
        learner = ProphetLearner(2, c_init, c_explore)
    elif problem == "pandora":
        make = lambda: AdversarialPandoraEnv(horizon, seed)
        learner = PandoraFixedOrderLearner(AdversarialPandoraEnv.costs, c_init, c_explore)
    else:
        raise ConfigError(f"unknown problem {problem!r}")
    env = make()
    hindsight = float(np.mean(env.play(env.hindsight_action(), horizon).reward))
    session = Session(make(), horizon)
    learner.run(session)
    total = sum(float(np.sum(b.rewards)) for b in session.blocks)
    return AdversarialReport(problem, horizon, seed, hindsight, total / session.rounds, session.rounds)
