"""Command-line entry point.

Subcommands: run-prophet, run-pandora, oracle, sweep, adversarial-demo.
Output files default to the directory named by BANDITSTOP_OUTDIR (or the
current directory).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from .distributions import parse_instance_text
from .environments import PandoraAction, PandoraInstance, ProphetAction, ProphetInstance, format_threshold
from .harness import (
    ConfigError,
    ExperimentConfig,
    adversarial_demo,
    default_workers,
    run_experiment,
    sweep_and_fit,
)
from .oracle import (
    one_round_regret,
    pandora_expected_utility,
    prophet_expected_reward,
    prophet_opt,
    reservation_values,
    weitzman,
)

OUTDIR_ENV = "BANDITSTOP_OUTDIR"


def _out_path(name: str | None, default: str) -> str:
    base = os.environ.get(OUTDIR_ENV, ".")
    path = name or default
    return path if os.path.isabs(path) or name else os.path.join(base, path)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--instance", required=True, help="instance file, one box per line")
    p.add_argument("--horizon", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--preset", choices=["desk", "paper"], default="desk")
    p.add_argument("--c-init", type=float, default=None)
    p.add_argument("--c-explore", type=float, default=None)
    p.add_argument("--c-est", type=float, default=None)
    p.add_argument("--feedback", choices=["value", "index", "prefix"], default="value")
    p.add_argument("--learner", choices=["bandit", "optimal", "fixed"], default="bandit")
    p.add_argument("--action", default=None, help="action key for --learner fixed")
    p.add_argument("--out", default=None)
    p.add_argument("--format", dest="fmt", choices=["csv", "jsonl"], default="csv")


def _config(args, problem: str) -> ExperimentConfig:
    ext = "csv" if args.fmt == "csv" else "jsonl"
    out = _out_path(args.out, f"{problem}-seed{args.seed}.{ext}")
    snapshots = getattr(args, "snapshots", None)
    return ExperimentConfig(
        problem=problem, instance=args.instance, horizon=args.horizon, seed=args.seed, preset=args.preset,
        c_init=args.c_init, c_explore=args.c_explore, c_est=args.c_est, feedback=args.feedback,
        mode=getattr(args, "mode", "exact"), learner=args.learner, action=args.action, out=out, fmt=args.fmt,
        snapshots=snapshots,
    )


def cmd_run(args, problem: str) -> int:
    cfg = _config(args, problem)
    trace = run_experiment(cfg)
    print(f"rounds={len(trace)} total_regret={trace.total_regret!r} out={cfg.out}")
    return 0


def cmd_oracle(args) -> int:
    with open(args.instance) as fh:
        dists, costs = parse_instance_text(fh.read())
    if costs is None:
        inst = ProphetInstance(tuple(dists))
        opt, th = prophet_opt(inst)
        print(f"optimal_value={opt!r}")
        print("optimal_thresholds=" + ";".join(format_threshold(t) for t in th))
        if args.action:
            a = ProphetAction.from_key(args.action)
            print(f"action_value={prophet_expected_reward(inst, a)!r} regret={one_round_regret(inst, a)!r}")
        return 0
    inst = PandoraInstance(tuple(dists), tuple(costs))
    action, value = weitzman(inst)
    print("reservation_values=" + ";".join(repr(s) for s in reservation_values(inst)))
    print(f"optimal_value={value!r}")
    print(f"optimal_action={action.key()}")
    if args.action:
        a = PandoraAction.from_key(args.action)
        print(f"action_value={pandora_expected_utility(inst, a)!r} regret={one_round_regret(inst, a)!r}")
    return 0


def cmd_sweep(args) -> int:
    horizons = [int(h) for h in args.horizons.split(",")]
    cfg = ExperimentConfig(
        problem=args.problem, instance=args.instance, seed=args.seed, preset=args.preset,
        c_init=args.c_init, c_explore=args.c_explore, c_est=args.c_est, mode=args.mode,
        learner=args.learner, action=args.action,
    )
    fit = sweep_and_fit(cfg, horizons, args.replicates, args.workers or default_workers())
    out = _out_path(args.out, f"sweep-{args.problem}.csv")
    with open(out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["horizon", "mean_regret", "std_regret", "replicates", "residual"], lineterminator="\n")
        w.writeheader()
        for row in fit.rows():
            w.writerow(row)
    print(json.dumps({"slope": fit.slope, "intercept": fit.intercept, "flags": fit.flags, "table": out}))
    return 0


def cmd_adversarial(args) -> int:
    rep = adversarial_demo(args.problem, args.horizon, args.seed)
    print(json.dumps(rep.__dict__))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="banditstop", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run-prophet", help="run a prophet learner and write its regret trace")
    _common(p)
    p.set_defaults(func=lambda a: cmd_run(a, "prophet"))

    p = sub.add_parser("run-pandora", help="run a Pandora learner and write its regret trace")
    _common(p)
    p.add_argument("--mode", choices=["exact", "approx"], default="exact")
    p.add_argument("--fixed-order", action="store_true", help="two boxes opened in the order (0, 1)")
    p.add_argument("--snapshots", default=None, help="JSONL file for per-phase constraint-group snapshots")
    p.set_defaults(func=lambda a: cmd_run(a, "pandora-fixed" if a.fixed_order else "pandora"))

    p = sub.add_parser("oracle", help="exact optimum (and optionally one action's value) of an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--action", default=None)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("sweep", help="regret over several horizons with a log-log slope fit")
    p.add_argument("--problem", choices=["prophet", "pandora", "pandora-fixed"], default="prophet")
    p.add_argument("--instance", required=True)
    p.add_argument("--horizons", default=",".join(str(2**k) for k in range(10, 18)))
    p.add_argument("--replicates", type=int, default=20)
    p.add_argument("--workers", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--preset", choices=["desk", "paper"], default="desk")
    p.add_argument("--c-init", type=float, default=None)
    p.add_argument("--c-explore", type=float, default=None)
    p.add_argument("--c-est", type=float, default=None)
    p.add_argument("--mode", choices=["exact", "approx"], default="exact")
    p.add_argument("--learner", choices=["bandit", "optimal", "fixed"], default="bandit")
    p.add_argument("--action", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("adversarial-demo", help="hindsight versus learner on an oblivious adversary")
    p.add_argument("--problem", choices=["prophet", "pandora"], default="prophet")
    p.add_argument("--horizon", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_adversarial)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
