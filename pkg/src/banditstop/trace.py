"""Round accounting shared by learners and the harness.

Learners never touch an environment directly.  They play through a
``Session``, which enforces the round budget, hands back rewards only (the
value-only feedback discipline), and logs each block of identical rounds
together with the oracle regret of its action.  A ``RegretTrace`` expands
the blocks into the per-round table written to disk.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

COLUMNS = ("t", "phase", "epsilon", "action", "reward", "regret", "cum_regret", "flags")


class HorizonExhausted(Exception):
    """Raised after the last permitted round has been played."""


@dataclass
class Block:
    start: int  # 1-based round index of the first round in the block
    phase: int
    epsilon: float
    action: str
    rewards: np.ndarray
    regret: float
    flags: str = ""

    @property
    def count(self) -> int:
        return len(self.rewards)


class Session:
    """Budgeted gateway between a learner and an environment.

    ``horizon`` is the T that enters the learners' formulas; ``budget`` caps
    the rounds actually played (defaults to the horizon, ``None`` means
    unlimited, which the phase-level tests use).  ``regret_fn`` maps an
    action to its one-round regret in reported units; ``reward_scale``
    converts observed rewards to reported units and ``key_fn`` renders an
    action for the log (both matter when the learner works on a rescaled
    instance).
    """

    def __init__(self, env, horizon: int, budget: int | None = -1, regret_fn=None, reward_scale: float = 1.0, key_fn=None):
        self.env = env
        self.horizon = int(horizon)
        self.budget = self.horizon if budget == -1 else budget
        self.regret_fn = regret_fn
        self.reward_scale = reward_scale
        self.key_fn = key_fn or (lambda a: a.key())
        self.rounds = 0
        self.phase = 0
        self.epsilon = math.nan
        self.blocks: list[Block] = []
        self.events: list[dict] = []
        self._regret_cache: dict[str, float] = {}

    @property
    def log_t(self) -> float:
        return math.log(self.horizon)

    @property
    def remaining(self) -> float:
        return math.inf if self.budget is None else self.budget - self.rounds

    def play(self, action, count: int, flag: str = "") -> np.ndarray:
        """Play ``action`` for ``count`` rounds and return the observed rewards."""
        count = int(count)
        if count < 0:
            raise ValueError("negative round count")
        allowed = int(min(count, self.remaining))
        rewards = self.env.play(action, allowed).reward if allowed > 0 else np.empty(0)
        if allowed > 0:
            key = self.key_fn(action)
            if key not in self._regret_cache:
                self._regret_cache[key] = self.regret_fn(action) if self.regret_fn else math.nan
            self.blocks.append(
                Block(self.rounds + 1, self.phase, self.epsilon, key, rewards * self.reward_scale, self._regret_cache[key], flag)
            )
            self.rounds += allowed
        if allowed < count:
            self.note("truncated", requested=count, played=allowed)
            raise HorizonExhausted(f"budget {self.budget} exhausted")
        return rewards

    def note(self, kind: str, **data) -> None:
        """Record a phase-level event (flags, snapshots)."""
        self.events.append({"round": self.rounds, "phase": self.phase, "kind": kind, **data})

    def flags(self, kind: str | None = None) -> list[dict]:
        return [e for e in self.events if kind is None or e["kind"] == kind]

    def total_regret(self) -> float:
        return float(sum(b.count * b.regret for b in self.blocks))

    def trace(self) -> "RegretTrace":
        return RegretTrace.from_blocks(self.blocks)


@dataclass
class RegretTrace:
    """Per-round table: t, phase, epsilon, action, reward, regret, cum_regret, flags."""

    t: np.ndarray
    phase: np.ndarray
    epsilon: np.ndarray
    action: list
    reward: np.ndarray
    regret: np.ndarray
    cum_regret: np.ndarray
    flags: list
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_blocks(cls, blocks) -> "RegretTrace":
        counts = [b.count for b in blocks]
        rep = lambda vals, dt=float: np.repeat(np.array(vals, dtype=dt), counts) if blocks else np.empty(0, dtype=dt)
        regret = rep([b.regret for b in blocks])
        actions, flags = [], []
        for b in blocks:
            actions.extend([b.action] * b.count)
            flags.extend([b.flags] * b.count)
        return cls(
            t=np.arange(1, sum(counts) + 1),
            phase=rep([b.phase for b in blocks], int),
            epsilon=rep([b.epsilon for b in blocks]),
            action=actions,
            reward=np.concatenate([b.rewards for b in blocks]) if blocks else np.empty(0),
            regret=regret,
            cum_regret=np.cumsum(regret),
            flags=flags,
        )

    def __len__(self) -> int:
        return len(self.t)

    @property
    def total_regret(self) -> float:
        return float(self.cum_regret[-1]) if len(self) else 0.0

    def rows(self):
        for k in range(len(self)):
            yield (
                int(self.t[k]), int(self.phase[k]), float(self.epsilon[k]), self.action[k],
                float(self.reward[k]), float(self.regret[k]), float(self.cum_regret[k]), self.flags[k],
            )

    # -- emission -----------------------------------------------------------

    def to_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows():
            w.writerow([r[0], r[1], repr(r[2]), r[3], repr(r[4]), repr(r[5]), repr(r[6]), r[7]])

    def to_jsonl(self, fh) -> None:
        for r in self.rows():
            rec = dict(zip(COLUMNS, r))
            for k in ("epsilon", "reward", "regret", "cum_regret"):
                if math.isnan(rec[k]):
                    rec[k] = None
            fh.write(json.dumps(rec) + "\n")

    def emit(self, path, fmt: str = "csv") -> None:
        with open(path, "w", newline="") as fh:
            (self.to_csv if fmt == "csv" else self.to_jsonl)(fh)

    @classmethod
    def parse(cls, path, fmt: str = "csv") -> "RegretTrace":
        with open(path, newline="") as fh:
            return cls.from_text(fh.read(), fmt)

    @classmethod
    def from_text(cls, text: str, fmt: str = "csv") -> "RegretTrace":
        if fmt == "csv":
            reader = csv.reader(io.StringIO(text))
            header = next(reader)
            if tuple(header) != COLUMNS:
                raise ValueError(f"unexpected header {header}")
            rows = [tuple(r) for r in reader]
        else:
            rows = []
            for line in text.splitlines():
                rec = json.loads(line)
                rows.append(tuple(rec[c] if rec[c] is not None else "nan" for c in COLUMNS))
        col = lambda k, f: np.array([f(r[k]) for r in rows]) if rows else np.empty(0)
        return cls(
            t=col(0, int), phase=col(1, int), epsilon=col(2, float), action=[r[3] for r in rows],
            reward=col(4, float), regret=col(5, float), cum_regret=col(6, float), flags=[r[7] for r in rows],
        )

    def equals(self, other: "RegretTrace") -> bool:
        same = lambda a, b: np.array_equal(a, b, equal_nan=True)
        return (
            same(self.t, other.t) and same(self.phase, other.phase) and same(self.epsilon, other.epsilon)
            and self.action == other.action and same(self.reward, other.reward)
            and same(self.regret, other.regret) and same(self.cum_regret, other.cum_regret) and self.flags == other.flags
        )
