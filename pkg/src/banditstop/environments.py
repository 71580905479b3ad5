"""Instances, actions and round simulators for both stopping problems.

Prophet rounds: values arrive in a fixed order and the first value that
meets its threshold is taken (the last value is always taken).
Pandora rounds: boxes are opened along an order, each at its cost, and the
search stops before a box once the best value seen meets that box's
threshold.  Utility is the best value seen minus the costs paid.

Environments simulate batches of rounds at once.  Row ``t`` of a batch
always consumes the same uniforms from a seeded Philox stream, so the
feedback does not depend on how rounds are batched.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .distributions import BoundedDistribution

ABOVE = math.inf  # threshold no value can meet: the round always continues


def format_threshold(x) -> str:
    return "ABOVE" if x == ABOVE else repr(float(x))


def parse_threshold(s: str) -> float:
    return ABOVE if s.strip() == "ABOVE" else float(s)


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, *stream)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *stream])))


class FeedbackModel(enum.Enum):
    PREFIX = "prefix"  # every value seen this round
    INDEX = "index"  # which box was taken (or where search stopped) plus the reward
    VALUE = "value"  # the reward only


# -- instances and actions ----------------------------------------------------


@dataclass(frozen=True)
class ProphetInstance:
    dists: tuple

    def __post_init__(self):
        object.__setattr__(self, "dists", tuple(self.dists))
        if len(self.dists) < 2:
            raise ValueError("need at least two distributions")

    @property
    def n(self) -> int:
        return len(self.dists)


@dataclass(frozen=True)
class PandoraInstance:
    dists: tuple
    costs: tuple

    def __post_init__(self):
        object.__setattr__(self, "dists", tuple(self.dists))
        object.__setattr__(self, "costs", tuple(float(c) for c in self.costs))
        if len(self.dists) != len(self.costs) or not self.dists:
            raise ValueError("need one cost per box")
        for d, c in zip(self.dists, self.costs):
            if c < 0 or c > d.mean + 1e-12:
                raise ValueError(f"cost {c} must lie in [0, E[X]={d.mean}]")

    @property
    def n(self) -> int:
        return len(self.dists)

    def scaled(self, k: float) -> "PandoraInstance":
        return PandoraInstance(tuple(d.scale(k) for d in self.dists), tuple(c * k for c in self.costs))


@dataclass(frozen=True)
class ProphetAction:
    """Thresholds for values 1..n-1; the last value is always accepted."""

    thresholds: tuple

    def __post_init__(self):
        object.__setattr__(self, "thresholds", tuple(self.thresholds))

    def validate(self, n: int) -> None:
        if len(self.thresholds) != n - 1:
            raise ValueError(f"expected {n - 1} thresholds, got {len(self.thresholds)}")
        for t in self.thresholds:
            if not (t == ABOVE or 0 <= t <= 1):
                raise ValueError(f"threshold {t} outside [0, 1]")

    def key(self) -> str:
        return ";".join(format_threshold(t) for t in self.thresholds)

    @classmethod
    def from_key(cls, s: str) -> "ProphetAction":
        return cls(tuple(parse_threshold(p) for p in s.split(";")) if s else ())


@dataclass(frozen=True)
class PandoraAction:
    """An opening order plus one threshold per box (indexed by box id)."""

    order: tuple
    thresholds: tuple

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(int(i) for i in self.order))
        object.__setattr__(self, "thresholds", tuple(self.thresholds))

    def validate(self, n: int, monotone: bool = True) -> None:
        if sorted(self.order) != list(range(n)) or len(self.thresholds) != n:
            raise ValueError(f"order {self.order} is not a permutation of {n} boxes")
        for t in self.thresholds:
            if not (t == ABOVE or 0 <= t <= 1):
                raise ValueError(f"threshold {t} outside [0, 1]")
        if monotone:
            seq = [self.thresholds[i] for i in self.order]
            if any(b > a for a, b in zip(seq, seq[1:])):
                raise ValueError(f"thresholds {seq} not nonincreasing along the order")

    def key(self) -> str:
        order = ">".join(str(i) for i in self.order)
        return order + "@" + ";".join(format_threshold(t) for t in self.thresholds)

    @classmethod
    def from_key(cls, s: str) -> "PandoraAction":
        order, th = s.split("@")
        return cls(tuple(int(i) for i in order.split(">")), tuple(parse_threshold(p) for p in th.split(";")))

    @classmethod
    def open_only(cls, i: int, n: int) -> "PandoraAction":
        """Open box i and stop: its utility plus its cost is a sample of X_i."""
        order = (i,) + tuple(k for k in range(n) if k != i)
        th = [0.0] * n
        th[i] = ABOVE
        return cls(order, tuple(th))


@dataclass
class Feedback:
    """Outcome of a batch of rounds, truncated to what the feedback model reveals."""

    reward: np.ndarray
    index: np.ndarray | None = None
    observed: np.ndarray | None = None


# -- vectorized round simulation ----------------------------------------------


def simulate_prophet(values: np.ndarray, thresholds) -> tuple[np.ndarray, np.ndarray]:
    """Reward and accepted index for each row of a (k, n) value matrix."""
    k, n = values.shape
    th = np.array([float(t) for t in thresholds] + [-np.inf], dtype=float)
    accept = values >= th[None, :]
    idx = np.argmax(accept, axis=1)
    return values[np.arange(k), idx], idx


def simulate_pandora(values: np.ndarray, costs, order, thresholds) -> tuple[np.ndarray, np.ndarray]:
    """Utility and number of boxes opened for each row of a (k, n) value matrix."""
    k, n = values.shape
    order = list(order)
    v = values[:, order]
    c = np.cumsum(np.asarray(costs, dtype=float)[order])
    run = np.maximum.accumulate(v, axis=1)
    if n > 1:
        th = np.array([float(thresholds[i]) for i in order[1:]])
        stop = run[:, :-1] >= th[None, :]
        opened = np.where(stop.any(axis=1), np.argmax(stop, axis=1) + 1, n)
    else:
        opened = np.ones(k, dtype=int)
    rows = np.arange(k)
    return run[rows, opened - 1] - c[opened - 1], opened


class Environment:
    """Base class: ``play(action, count)`` returns a ``Feedback`` batch."""

    n: int
    feedback: FeedbackModel

    def play(self, action, count: int) -> Feedback:
        raise NotImplementedError


class ProphetEnv(Environment):
    """Stochastic prophet environment over independent bounded values."""

    def __init__(self, instance: ProphetInstance, seed: int = 0, feedback=FeedbackModel.VALUE, rng=None):
        self.instance = instance
        self.n = instance.n
        self.feedback = FeedbackModel(feedback)
        self.rng = rng if rng is not None else make_rng(seed, 0)
        self.rounds = 0

    def draw(self, count: int) -> np.ndarray:
        u = self.rng.random((count, self.n))
        return np.column_stack([d.transform(u[:, i]) for i, d in enumerate(self.instance.dists)])

    def play(self, action: ProphetAction, count: int) -> Feedback:
        action.validate(self.n)
        x = self.draw(count)
        reward, idx = simulate_prophet(x, action.thresholds)
        self.rounds += count
        return _reveal(self.feedback, reward, idx, x, idx + 1)


class PandoraEnv(Environment):
    """Stochastic Pandora environment with fixed per-box costs."""

    def __init__(self, instance: PandoraInstance, seed: int = 0, feedback=FeedbackModel.VALUE, rng=None):
        self.instance = instance
        self.n = instance.n
        self.feedback = FeedbackModel(feedback)
        self.rng = rng if rng is not None else make_rng(seed, 0)
        self.rounds = 0

    def draw(self, count: int) -> np.ndarray:
        u = self.rng.random((count, self.n))
        return np.column_stack([d.transform(u[:, i]) for i, d in enumerate(self.instance.dists)])

    def play(self, action: PandoraAction, count: int) -> Feedback:
        action.validate(self.n)
        x = self.draw(count)
        util, opened = simulate_pandora(x, self.instance.costs, action.order, action.thresholds)
        self.rounds += count
        seen = np.full_like(x, np.nan)
        if self.feedback is FeedbackModel.PREFIX:
            pos = np.arange(self.n)[None, :] < opened[:, None]
            cols = np.array(action.order)
            seen[:, cols] = np.where(pos, x[:, cols], np.nan)
        return _reveal(self.feedback, util, opened, seen, None)


def _reveal(model: FeedbackModel, reward, idx, values, prefix_len) -> Feedback:
    if model is FeedbackModel.VALUE:
        return Feedback(reward)
    if model is FeedbackModel.INDEX:
        return Feedback(reward, index=idx)
    if prefix_len is not None:
        cols = np.arange(values.shape[1])[None, :]
        values = np.where(cols < prefix_len[:, None], values, np.nan)
    return Feedback(reward, index=idx, observed=values)


def prophet_round(instance: ProphetInstance, action: ProphetAction, rng: np.random.Generator, feedback=FeedbackModel.VALUE) -> Feedback:
    """One prophet round drawn from ``rng``."""
    return ProphetEnv(instance, feedback=feedback, rng=rng).play(action, 1)


def pandora_round(instance: PandoraInstance, action: PandoraAction, rng: np.random.Generator, feedback=FeedbackModel.VALUE) -> Feedback:
    """One Pandora round drawn from ``rng``."""
    return PandoraEnv(instance, feedback=feedback, rng=rng).play(action, 1)


# -- adversarial constructions -----------------------------------------------


class _BinaryCode:
    """A hidden bit string s of length T, read as the dyadic number Bin(s).

    The probe for round t is the midpoint between the largest code with
    prefix ``s_<t 0`` and the smallest code with prefix ``s_<t 1``; it sits
    below Bin(s) exactly when s_t = 1.  Values are exact integers over
    2^(T+1), so any horizon works.
    """

    def __init__(self, horizon: int, seed: int):
        self.T = horizon
        self.bits = make_rng(seed, 1).integers(0, 2, size=horizon).tolist()
        self._prefix = 0  # integer numerator of Bin(s_<t) over 2^T

    def value(self) -> Fraction:
        num = 0
        for b in self.bits:
            num = 2 * num + b
        return Fraction(num, 2**self.T)

    def probe(self, t: int) -> Fraction:
        """Midpoint for 1-based round t; advances the stored prefix."""
        num = 2 * self._prefix + 2 ** (self.T + 1 - t) - 1
        self._prefix += self.bits[t - 1] * 2 ** (self.T - t)
        return Fraction(num, 2 ** (self.T + 1))


class AdversarialProphetEnv(Environment):
    """Oblivious two-value instance that defeats any learner seeing only rewards.

    X_1 = 1/2 + eps * probe_t, X_2 = s_t.  The hindsight threshold
    1/2 + eps * Bin(s) earns 3/4 per round.  Without the code, X_2 is a fair
    coin independent of everything seen so far and any play earns 1/2.
    """

    def __init__(self, horizon: int, seed: int = 0, bias: float = 1e-6, feedback=FeedbackModel.VALUE):
        self.n = 2
        self.horizon = horizon
        self.feedback = FeedbackModel(feedback)
        self.bias = Fraction(bias)
        self.code = _BinaryCode(horizon, seed)
        self.rounds = 0

    def hindsight_action(self) -> ProphetAction:
        return ProphetAction((Fraction(1, 2) + self.bias * self.code.value(),))

    def play(self, action: ProphetAction, count: int) -> Feedback:
        action.validate(self.n)
        if self.rounds + count > self.horizon:
            raise ValueError("adversarial code exhausted")
        tau = action.thresholds[0]
        tau = tau if tau == ABOVE else Fraction(tau)
        rewards, idx, seen = np.empty(count), np.empty(count, dtype=int), np.full((count, 2), np.nan)
        for r in range(count):
            self.rounds += 1
            x2 = self.code.bits[self.rounds - 1]
            x1 = Fraction(1, 2) + self.bias * self.code.probe(self.rounds)
            seen[r, 0] = float(x1)
            if tau != ABOVE and x1 >= tau:
                rewards[r], idx[r] = float(x1), 0
            else:
                rewards[r], idx[r], seen[r, 1] = float(x2), 1, x2
        return _reveal(self.feedback, rewards, idx, seen, None)


class AdversarialPandoraEnv(Environment):
    """Oblivious two-box instance with c_1 = 0, c_2 = 1/2.

    X_1 = eps * probe_t and X_2 = s_t.  Opening box 1 first and stopping when
    X_1 >= eps * Bin(s) earns 1/4 per round in hindsight; uninformed play
    earns 0 in expectation.
    """

    costs = (0.0, 0.5)

    def __init__(self, horizon: int, seed: int = 0, bias: float = 1e-6, feedback=FeedbackModel.VALUE):
        self.n = 2
        self.horizon = horizon
        self.feedback = FeedbackModel(feedback)
        self.bias = Fraction(bias)
        self.code = _BinaryCode(horizon, seed)
        self.rounds = 0

    def hindsight_action(self) -> PandoraAction:
        return PandoraAction((0, 1), (ABOVE, self.bias * self.code.value()))

    def play(self, action: PandoraAction, count: int) -> Feedback:
        action.validate(self.n)
        if self.rounds + count > self.horizon:
            raise ValueError("adversarial code exhausted")
        first, second = action.order
        tau = action.thresholds[second]
        tau = tau if tau == ABOVE else Fraction(tau)
        rewards, opened, seen = np.empty(count), np.empty(count, dtype=int), np.full((count, 2), np.nan)
        for r in range(count):
            self.rounds += 1
            x = [self.bias * self.code.probe(self.rounds), Fraction(self.code.bits[self.rounds - 1])]
            best, paid, k = x[first], Fraction(self.costs[first]), 1
            seen[r, first] = float(x[first])
            if tau == ABOVE or best < tau:
                best, paid, k = max(best, x[second]), paid + Fraction(self.costs[second]), 2
                seen[r, second] = float(x[second])
            rewards[r], opened[r] = float(best - paid), k
        return _reveal(self.feedback, rewards, opened, seen, None)


def hard_stochastic_prophet(horizon: int) -> tuple[ProphetInstance, ProphetInstance]:
    """Two instances a learner cannot tell apart in fewer than ~T rounds.

    X_1 is the constant 1/2 and X_2 is Bernoulli(1/2 +- 1/sqrt(T)).  The best
    play differs between them and the wrong play loses 1/sqrt(T) per round.
    """
    gap = 1.0 / math.sqrt(horizon)
    x1 = BoundedDistribution.atom(0.5)
    mk = lambda p: BoundedDistribution.discrete([0.0, 1.0], [1 - p, p])
    return ProphetInstance((x1, mk(0.5 + gap))), ProphetInstance((x1, mk(0.5 - gap)))
