"""Bandit learners for the prophet problem under value-only feedback.

Each learner keeps one confidence interval per threshold and shrinks it
phase by phase.  A phase plays only the two endpoints of an interval; the
difference of their average rewards, combined with a CDF estimate, gives an
affine function of the threshold whose small values mark the thresholds
that are near-optimal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import EmpiricalCdf
from .doubling import DoublingConfig, run_doubling
from .environments import ABOVE, ProphetAction
from .trace import HorizonExhausted


@dataclass
class ConfidenceIntervals:
    lo: list
    hi: list

    def __post_init__(self):
        self.lo, self.hi = [float(x) for x in self.lo], [float(x) for x in self.hi]
        for a, b in zip(self.lo, self.hi):
            if not (0.0 <= a <= b <= 1.0):
                raise ValueError(f"bad interval [{a}, {b}]")

    def __len__(self) -> int:
        return len(self.lo)

    def copy(self) -> "ConfidenceIntervals":
        return ConfidenceIntervals(list(self.lo), list(self.hi))

    def contains(self, values, tol: float = 1e-12) -> list[bool]:
        return [a - tol <= v <= b + tol for a, b, v in zip(self.lo, self.hi, values)]

    def within(self, other: "ConfidenceIntervals", tol: float = 1e-12) -> bool:
        return all(a >= c - tol and b <= d + tol for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def midpoints(self) -> list[float]:
        return [(a + b) / 2 for a, b in zip(self.lo, self.hi)]

    def widths(self) -> list[float]:
        return [b - a for a, b in zip(self.lo, self.hi)]


@dataclass
class CdfEstimates:
    fhat: list
    generation: int = 0


@dataclass
class PhaseReport:
    epsilon: float
    rounds_used: int
    refined: ConfidenceIntervals
    flags: list = field(default_factory=list)
    delta_hat: list = field(default_factory=list)  # (slope, intercept) per threshold


def explore_rounds(c_explore: float, horizon: int, eps: float) -> int:
    return math.ceil(c_explore * math.log(horizon) / eps**2)


def affine_cut(slope: float, intercept: float, lo: float, hi: float, below: float, above: float):
    """Solve {tau in [lo, hi] : -below <= slope * tau + intercept <= above}.

    The function is nondecreasing (slope >= 0), so the set is an interval.
    Returns ``(lo', hi', empty)``; an empty set collapses to the zero
    crossing clamped into [lo, hi].
    """
    if slope < 0:
        raise ValueError("bounding function must be nondecreasing")
    clamp = lambda x: min(max(x, lo), hi)
    if slope == 0:
        if -below <= intercept <= above:
            return lo, hi, False
        edge = lo if intercept > 0 else hi
        return edge, edge, True
    a = clamp((-below - intercept) / slope)
    b = clamp((above - intercept) / slope)
    f = lambda x: slope * x + intercept
    if f(a) < -below - 1e-12 or f(b) > above + 1e-12 or a > b:
        z = clamp(-intercept / slope)
        return z, z, True
    return a, b, False


# -- n = 2 --------------------------------------------------------------------


def init2(session, c_init: float) -> tuple[EmpiricalCdf, ConfidenceIntervals]:
    """Free samples of both values, then an interval of width T^(-1/4) around E[X_2].

    Threshold 0 always takes X_1, threshold ABOVE always takes X_2.  The
    half-width T^(-1/4)/2 is the Hoeffding radius of the sample mean at
    confidence 2 T^(-c_init/2).
    """
    T = session.horizon
    m = math.ceil(c_init * math.sqrt(T) * math.log(T))
    x1 = session.play(ProphetAction((0.0,)), m, "init")
    x2 = session.play(ProphetAction((ABOVE,)), m, "init")
    half = 0.5 * T ** -0.25
    mu = float(np.mean(x2))
    iv = ConfidenceIntervals([max(mu - half, 0.0)], [min(mu + half, 1.0)])
    return EmpiricalCdf(x1), iv


def isa2(session, interval: ConfidenceIntervals, fhat1, eps: float, c_explore: float, cut: float = 5.0) -> PhaseReport:
    """One interval-shrinking phase for two values.

    delta_hat(tau) = (F1(u) - F1(l)) tau + const, estimated from the two
    endpoint plays; the refined interval keeps |delta_hat| <= cut * eps.
    """
    start = session.rounds
    lo, hi = interval.lo[0], interval.hi[0]
    m = explore_rounds(c_explore, session.horizon, eps)
    r_lo = float(np.mean(session.play(ProphetAction((lo,)), m)))
    r_hi = float(np.mean(session.play(ProphetAction((hi,)), m)))
    fu, fl = fhat1.cdf_left(hi), fhat1.cdf_left(lo)
    slope = fu - fl
    intercept = -fu * hi + fl * lo + fhat1.integral_cdf(lo, hi) - (r_hi - r_lo)
    a, b, empty = affine_cut(slope, intercept, lo, hi, cut * eps, cut * eps)
    flags = ["degenerate"] if empty else []
    if eps <= session.horizon ** -0.5:
        flags.append("precondition")
    for f in flags:
        session.note(f, epsilon=eps, threshold=0)
    return PhaseReport(eps, session.rounds - start, ConfidenceIntervals([a], [b]), flags, [(slope, intercept)])


# -- general n ----------------------------------------------------------------


def init_general(session, n: int, c_init: float) -> tuple[CdfEstimates, ConfidenceIntervals]:
    """Free samples of every value, then one averaging block per threshold.

    Pattern (ABOVE, ..., ABOVE, 0, ..., 0) with i leading ABOVEs returns X_i.
    Then, from the last threshold backwards, skipping everything up to i and
    using the lower ends already found estimates the value of continuing.
    """
    T = session.horizon
    m = math.ceil(c_init * n * n * math.sqrt(T) * math.log(T))
    fhat = []
    for i in range(n):
        action = ProphetAction(tuple([ABOVE] * i + [0.0] * (n - 1 - i)))
        fhat.append(EmpiricalCdf(session.play(action, m, "init")))
    w = T ** -0.25 / (10 * n)
    lo, hi = [0.0] * (n - 1), [0.0] * (n - 1)
    for i in range(n - 2, -1, -1):
        action = ProphetAction(tuple([ABOVE] * (i + 1) + lo[i + 1 :]))
        mu = float(np.mean(session.play(action, m, "init")))
        lo[i] = min(max(mu - w, 0.0), 1.0)
        hi[i] = min(max(mu + (2 * n - 2 * i - 3) * w, lo[i]), 1.0)
    return CdfEstimates(fhat), ConfidenceIntervals(lo, hi)


def isa_general(session, intervals: ConfidenceIntervals, est: CdfEstimates, eps: float, c_explore: float) -> PhaseReport:
    """One interval-shrinking phase for n values, last threshold first.

    Threshold i is probed with earlier thresholds at their upper ends (so
    the probe is reached as often as the interval allows) and later ones at
    their freshly refined lower ends.
    """
    start = session.rounds
    n = len(intervals) + 1
    lo, hi = intervals.lo, intervals.hi
    new_lo, new_hi = list(lo), list(hi)
    m = explore_rounds(c_explore, session.horizon, eps)
    flags, deltas = [], [None] * (n - 1)
    if eps <= 12 * session.horizon ** -0.5:
        flags.append("precondition")
    for i in range(n - 2, -1, -1):
        head = list(hi[:i])
        tail = new_lo[i + 1 :]
        r_lo = float(np.mean(session.play(ProphetAction(tuple(head + [lo[i]] + tail)), m)))
        r_hi = float(np.mean(session.play(ProphetAction(tuple(head + [hi[i]] + tail)), m)))
        reach = float(np.prod([est.fhat[j].cdf_left(hi[j]) for j in range(i)])) if i else 1.0
        f = est.fhat[i]
        fu, fl = f.cdf_left(hi[i]), f.cdf_left(lo[i])
        slope = reach * (fu - fl)
        intercept = reach * (-fu * hi[i] + fl * lo[i] + f.integral_cdf(lo[i], hi[i])) - (r_hi - r_lo)
        a, b, empty = affine_cut(slope, intercept, lo[i], hi[i], eps, (2 * n - 2 * i - 3) * eps)
        new_lo[i], new_hi[i] = a, b
        deltas[i] = (slope, intercept)
        if empty:
            flags.append(f"degenerate:{i}")
    for fl_ in flags:
        session.note(fl_, epsilon=eps)
    return PhaseReport(eps, session.rounds - start, ConfidenceIntervals(new_lo, new_hi), flags, deltas)


# -- full learner ---------------------------------------------------------------


@dataclass
class ProphetLearner:
    """Initialization followed by doubling phases of interval shrinking."""

    n: int
    c_init: float = 4.0
    c_explore: float = 4.0
    reports: list = field(default_factory=list)

    def run(self, session) -> ConfidenceIntervals | None:
        """Play the whole horizon; returns the final intervals (None if
        initialization alone used up the budget)."""
        session.phase = 0
        try:
            if self.n == 2:
                fhat, iv = init2(session, self.c_init)
                step = lambda s, iv, eps: isa2(s, iv, fhat, eps, self.c_explore)
                alpha = 0.0
            else:
                est, iv = init_general(session, self.n, self.c_init)
                step = lambda s, iv, eps: isa_general(s, iv, est, eps, self.c_explore)
                alpha = 5.0
        except HorizonExhausted:
            return None

        def subroutine(s, iv, eps):
            rep = step(s, iv, eps)
            self.reports.append(rep)
            return rep.refined

        cfg = DoublingConfig(session.horizon, self.n, alpha, subroutine, lambda iv: ProphetAction(tuple(iv.midpoints())))
        return run_doubling(cfg, session, iv)
