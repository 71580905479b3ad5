"""Bandit learners for Pandora's box under utility-only feedback.

Two learners live here.  The fixed-order learner handles two boxes that are
always opened in the order (first, second) and learns only the threshold
that decides whether to open the second box.  The general learner keeps a
constraint group (one threshold interval per box plus known order
relations) and, phase by phase, shrinks the intervals with MoveBound plays
and orders pairs of boxes with SwapTest plays.

Both estimate a bounding function of the form
``delta_hat(tau) = C0 - s * g_hat(tau)``, where ``g_hat`` is the estimated
gain of the box being tuned and ``s`` the estimated probability of reaching
it with the running max between the two played thresholds.  Since the gain
is nonincreasing, the set where ``delta_hat`` is small is an interval whose
ends are found by inverting the gain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constraints import ConstraintGroup, InvariantViolation, canonical_policy, sort_boxes, validate_policy
from .distributions import EmpiricalCdf
from .doubling import DoublingConfig, run_doubling
from .environments import ABOVE, PandoraAction
from .problem_a import MoveBoundResult, find_movebound
from .prophet_learner import ConfidenceIntervals, PhaseReport, explore_rounds
from .trace import HorizonExhausted


@dataclass
class PandoraEstimates:
    """One empirical CDF per box, built from samples no earlier step has used.

    A set may be consumed once; a second use raises, which enforces the
    fresh-samples requirement of the refinement steps.
    """

    fhat: list
    generation: int = 0
    consumed: bool = False

    def consume(self) -> list:
        if self.consumed:
            raise ValueError(f"estimate set {self.generation} already used")
        self.consumed = True
        return self.fhat


def harvest_samples(session, costs, box: int, count: int, flag: str = "estimate") -> np.ndarray:
    """Values of one box from single-open plays (utility plus cost)."""
    n = len(costs)
    r = session.play(PandoraAction.open_only(box, n), count, flag)
    return np.clip(r + costs[box], 0.0, None)


def harvest_estimates(session, costs, count: int, generation: int, boxes=None) -> PandoraEstimates:
    boxes = range(len(costs)) if boxes is None else boxes
    fhat = [EmpiricalCdf(harvest_samples(session, costs, k, count), generation) if k in boxes else None for k in range(len(costs))]
    return PandoraEstimates(fhat, generation)


def estimate_count(c_est: float, n: int, horizon: int, eps: float) -> int:
    return math.ceil(c_est * n * n * math.log(horizon) / eps)


# -- shared bounding-function algebra --------------------------------------------


def _product_integral(front, fi, lo: float, hi: float) -> float:
    """Integral over [lo, hi] of prod(front CDFs) * (F_i - 1) for empirical CDFs.

    Every factor is a step function, so the integrand is constant between
    consecutive sample points and the integral is an exact finite sum.
    """
    if hi <= lo:
        return 0.0
    pts = [np.array([lo, hi])]
    for f in list(front) + [fi]:
        xs = f.xs
        pts.append(xs[(xs > lo) & (xs < hi)])
    grid = np.unique(np.concatenate(pts))
    mid = (grid[:-1] + grid[1:]) / 2
    val = np.asarray(fi.cdf(mid)) - 1.0
    for f in front:
        val = val * np.asarray(f.cdf(mid))
    return float(np.sum(val * np.diff(grid)))


@dataclass
class GainBand:
    """delta_hat(tau) = intercept - slope * g_hat(tau) on [lo, hi], and its small set."""

    slope: float
    intercept: float
    lo: float
    hi: float
    refined: tuple
    empty: bool


def gain_band(fi, cost: float, slope: float, intercept: float, lo: float, hi: float, below: float, above: float) -> GainBand:
    """Solve {tau in [lo, hi] : -below <= intercept - slope * g_hat(tau) <= above}.

    An empty solution collapses to the zero crossing clamped into [lo, hi].
    A zero slope leaves the interval unchanged when the constant passes.
    """
    clamp = lambda x: min(max(x, lo), hi)
    if slope <= 0:
        ok = -below <= intercept <= above
        return GainBand(slope, intercept, lo, hi, (lo, hi), not ok)
    a = fi.excess_at_most(cost + (intercept + below) / slope)
    b = fi.excess_at_least(cost + (intercept - above) / slope)
    if a is not None and b is not None:
        a, b = max(a, lo), min(b, hi)
        if a <= b:
            return GainBand(slope, intercept, lo, hi, (a, b), False)
    level = cost + intercept / slope
    z = hi if level < 0 else fi.excess_at_most(level)
    z = clamp(z)
    return GainBand(slope, intercept, lo, hi, (z, z), True)


def bounding_intercept(front, fi, cost: float, lo: float, hi: float, r_hi: float, r_lo: float) -> tuple[float, float]:
    """(slope, intercept) of delta_hat for thresholds played at ``lo`` and ``hi``."""
    reach = lambda x: float(np.prod([f.cdf_left(x) for f in front])) if front else 1.0
    ru, rl = reach(hi), reach(lo)
    g = lambda x: float(fi.gain(x, cost))
    intercept = ru * g(hi) - rl * g(lo) - _product_integral(front, fi, lo, hi) - (r_hi - r_lo)
    return ru - rl, intercept


# -- initialization ----------------------------------------------------------------


def gain_interval(fi, cost: float, half: float) -> tuple[float, float]:
    """{tau : |g_hat(tau)| <= half}, an interval because g_hat is nonincreasing."""
    lo = fi.excess_at_most(cost + half)
    hi = fi.excess_at_least(cost - half)
    if hi is None:
        raise ValueError(f"no root: cost {cost} exceeds the estimated mean {fi.mean} by more than {half}")
    return float(min(lo, hi)), float(min(hi, 1.0))


def init_pandora(session, costs, c_init: float, boxes=None) -> tuple[list, ConfidenceIntervals]:
    """Single-open samples of each box, then the set where the estimated gain is tiny.

    With N = c_init sqrt(T) ln T samples the estimated gain is within
    T^(-1/4)/2 of the truth, so the returned interval keeps the reservation
    value and the true gain stays below T^(-1/4) on it.
    """
    T, n = session.horizon, len(costs)
    boxes = list(range(n)) if boxes is None else list(boxes)
    m = math.ceil(c_init * math.sqrt(T) * math.log(T))
    half = 0.5 * T ** -0.25
    fhat, lo, hi = [None] * n, [0.0] * n, [0.0] * n
    for k in boxes:
        fhat[k] = EmpiricalCdf(harvest_samples(session, costs, k, m, "init"))
        lo[k], hi[k] = gain_interval(fhat[k], costs[k], half)
    return fhat, ConfidenceIntervals([lo[k] for k in boxes], [hi[k] for k in boxes])


# -- fixed order, two boxes ----------------------------------------------------------


def fixed_order_action(tau: float) -> PandoraAction:
    """Always open box 0; open box 1 when box 0's value is below tau."""
    return PandoraAction((0, 1), (ABOVE, float(tau)))


def isa_fixed_order(session, interval: ConfidenceIntervals, est: PandoraEstimates, costs, eps: float, c_explore: float, cut: float = 4.0) -> PhaseReport:
    """One interval-shrinking phase for the second box's threshold.

    Plays both ends of the interval, then keeps {tau : |delta_hat(tau)| <= cut eps}.
    """
    start = session.rounds
    f1, f2 = est.consume()
    lo, hi = interval.lo[0], interval.hi[0]
    m = explore_rounds(c_explore, session.horizon, eps)
    r_lo = float(np.mean(session.play(fixed_order_action(lo), m)))
    r_hi = float(np.mean(session.play(fixed_order_action(hi), m)))
    slope, intercept = bounding_intercept([f1], f2, costs[1], lo, hi, r_hi, r_lo)
    band = gain_band(f2, costs[1], slope, intercept, lo, hi, cut * eps, cut * eps)
    flags = []
    if band.empty:
        flags.append("degenerate")
    if eps <= session.horizon ** -0.5:
        flags.append("precondition")
    for f in flags:
        session.note(f, epsilon=eps, box=1)
    a, b = band.refined
    return PhaseReport(eps, session.rounds - start, ConfidenceIntervals([a], [b]), flags, [(slope, intercept)])


@dataclass
class PandoraFixedOrderLearner:
    """Two boxes, fixed order: initialization, then doubling phases."""

    costs: tuple
    c_init: float = 4.0
    c_explore: float = 4.0
    c_est: float = 64.0
    reports: list = field(default_factory=list)

    def run(self, session) -> ConfidenceIntervals | None:
        if len(self.costs) != 2:
            raise ValueError("the fixed-order learner handles exactly two boxes")
        session.phase = 0
        try:
            fhat, iv = init_pandora(session, self.costs, self.c_init, boxes=[1])
        except HorizonExhausted:
            return None
        generation = [0]

        def subroutine(s, iv, eps):
            generation[0] += 1
            count = math.ceil(self.c_est * math.log(s.horizon) / eps)
            est = harvest_estimates(s, self.costs, count, generation[0])
            rep = isa_fixed_order(s, iv, est, self.costs, eps, self.c_explore)
            self.reports.append(rep)
            return rep.refined

        cfg = DoublingConfig(session.horizon, 2, 0.0, subroutine, lambda iv: fixed_order_action(iv.midpoints()[0]))
        return run_doubling(cfg, session, iv)


# -- general n: interval shrinking with MoveBound plays ---------------------------------


@dataclass
class PbisaReport:
    box: int
    before: tuple
    refined: tuple
    movebound: MoveBoundResult
    band: GainBand | None
    rounds: int
    flags: list = field(default_factory=list)


def _play_valid(session, group: ConstraintGroup, policy: PandoraAction, count: int, flag: str = "") -> float:
    problems = validate_policy(group, policy)
    if problems:
        raise InvariantViolation(f"learner tried an invalid policy {policy.key()}: {problems}")
    return float(np.mean(session.play(policy, count, flag)))


def pbisa(session, group: ConstraintGroup, i: int, eps: float, c_explore: float, est: PandoraEstimates, costs, mode: str = "exact") -> PbisaReport:
    """Refine box i's interval using its MoveBound policy.

    Plays the policy with box i's threshold at the upper then the lower
    admissible value, and keeps {tau in [l_i, u_i] : |delta_hat(tau)| <= eps}.
    With no estimated reach gap nothing can be learned and the interval is
    returned unchanged.
    """
    start = session.rounds
    fhat = est.consume()
    mb = find_movebound(group, i, fhat, mode)
    before = (group.lo[i], group.hi[i])
    flags = list(mb.flags)
    if eps <= 16 * session.horizon ** -0.5:
        flags.append("precondition")
    if mb.reach_gap <= 0 or mb.hi <= mb.lo:
        flags.append("unchanged")
        return PbisaReport(i, before, before, mb, None, session.rounds - start, flags)
    m = explore_rounds(c_explore, session.horizon, eps)
    r_hi = _play_valid(session, group, mb.policy(mb.hi), m)
    r_lo = _play_valid(session, group, mb.policy(mb.lo), m)
    pos = mb.order.index(i)
    front = [fhat[k] for k in mb.order[:pos]]
    slope, intercept = bounding_intercept(front, fhat[i], costs[i], mb.lo, mb.hi, r_hi, r_lo)
    band = gain_band(fhat[i], costs[i], slope, intercept, before[0], before[1], eps, eps)
    if band.empty:
        flags.append("degenerate")
    return PbisaReport(i, before, band.refined, mb, band, session.rounds - start, flags)


# -- general n: ordering pairs with SwapTest plays ------------------------------------


def calc_smart(group: ConstraintGroup, i: int, j: int) -> tuple[PandoraAction, PandoraAction]:
    """The SwapTest pair: i just before j, and j just before i, at a shared threshold.

    Boxes forced ahead of i or j, or whose interval lies above the shared
    threshold, sit in front at their upper ends; the rest follow at their
    lower ends.
    """
    tau = max(group.lo[i], group.lo[j])
    if tau > min(group.hi[i], group.hi[j]):
        raise ValueError(f"intervals of {i} and {j} are disjoint")
    front = {k for k in range(group.n) if k not in (i, j) and ((k, i) in group.edges or (k, j) in group.edges or group.lo[k] > tau)}
    back = [k for k in range(group.n) if k not in (i, j) and k not in front]
    th = [0.0] * group.n
    for k in front:
        th[k] = group.hi[k]
    for k in back:
        th[k] = group.lo[k]
    th[i] = th[j] = tau
    head = sort_boxes(list(front), th, group)
    tail = sort_boxes(back, th, group)
    first = PandoraAction(tuple(head + [i, j] + tail), tuple(th))
    second = PandoraAction(tuple(head + [j, i] + tail), tuple(th))
    return first, second


@dataclass
class SwapTestReport:
    pair: tuple
    gap: float
    added: tuple | None
    rounds: int
    direct: bool = False


def swaptest(session, group: ConstraintGroup, i: int, j: int, eps: float, c_explore: float) -> SwapTestReport:
    """Test the order of i and j; adds the winning constraint to ``group`` in place.

    The constraint is added when the two average utilities differ by more
    than 40 n eps.  Otherwise the swap difference at the shared threshold
    is certified small.  Boxes whose intervals are already disjoint are
    ordered directly without playing.
    """
    n = group.n
    if group.ordered(i, j):
        raise ValueError(f"pair ({i}, {j}) is already ordered")
    for a, b in ((i, j), (j, i)):
        if group.lo[a] > group.hi[b]:
            group.add(a, b)
            return SwapTestReport((i, j), math.nan, (a, b), 0, True)
    start = session.rounds
    pi, pj = calc_smart(group, i, j)
    m = math.ceil(c_explore * math.log(session.horizon) / (n * n * eps * eps))
    r_ij = _play_valid(session, group, pi, m)
    r_ji = _play_valid(session, group, pj, m)
    gap = r_ij - r_ji
    added = None
    if abs(gap) > 40 * n * eps:
        added = (i, j) if gap > 0 else (j, i)
        group.add(*added)
    return SwapTestReport((i, j), gap, added, session.rounds - start)


# -- one phase of the general learner --------------------------------------------------


@dataclass
class PanAlgReport:
    epsilon: float
    group: ConstraintGroup
    pbisa: list
    swaptests: list
    tests_per_pair: dict
    rounds: int
    flags: list = field(default_factory=list)


def pan_alg(session, group: ConstraintGroup, eps: float, c_explore: float, costs, mode: str = "exact", c_est: float = 64.0, generation: int = 0) -> PanAlgReport:
    """Refine every interval, then settle pair orders until the queue drains.

    Returns a new group; the input group is left untouched.
    """
    start = session.rounds
    n = group.n
    count = estimate_count(c_est, n, session.horizon, eps)
    lo, hi, reports = list(group.lo), list(group.hi), []
    for i in range(n):
        est = harvest_estimates(session, costs, count, generation * n + i)
        rep = pbisa(session, group, i, eps, c_explore, est, costs, mode)
        reports.append(rep)
        lo[i], hi[i] = rep.refined
    new = ConstraintGroup(lo, hi, set(group.edges))
    new.tighten()
    new.check()
    new.add_disjoint()

    queue = {(a, b) for a in range(n) for b in range(a + 1, n) if not new.ordered(a, b)}
    tests: dict = {}
    swaps = []
    while queue:
        a, b = min(queue)
        queue.discard((a, b))
        if new.ordered(a, b):
            continue
        before = list(new.lo)
        rep = swaptest(session, new, a, b, eps, c_explore)
        swaps.append(rep)
        if not rep.direct:
            tests[(a, b)] = tests.get((a, b), 0) + 1
            if tests[(a, b)] > 4 * n:
                raise AssertionError(f"pair ({a}, {b}) tested more than 4n times")
        for k in range(n):
            if new.lo[k] != before[k]:
                for k2 in range(n):
                    if k2 != k and not new.ordered(k, k2):
                        queue.add((min(k, k2), max(k, k2)))
    total = sum(tests.values())
    if total > 4 * n**3:
        raise AssertionError(f"{total} swap tests exceed 4n^3")
    flags = sorted({f for r in reports for f in r.flags})
    return PanAlgReport(eps, new, reports, swaps, tests, session.rounds - start, flags)


def initial_group(lo, hi) -> ConstraintGroup:
    """Initial intervals plus the order forced by disjoint intervals."""
    g = ConstraintGroup(lo, hi)
    g.add_disjoint()
    return g


@dataclass
class PandoraLearner:
    """General Pandora learner on an instance already scaled into [0, 1/(2n)].

    The harness scales values and costs by 1/(2n) so that utilities are
    bounded, and multiplies rewards and regret back when reporting.
    """

    costs: tuple
    c_init: float = 4.0
    c_explore: float = 4.0
    c_est: float = 64.0
    mode: str = "exact"
    reports: list = field(default_factory=list)

    def run(self, session) -> ConstraintGroup | None:
        n = len(self.costs)
        session.phase = 0
        try:
            _, iv = init_pandora(session, self.costs, self.c_init)
        except HorizonExhausted:
            return None
        group = initial_group(iv.lo, iv.hi)
        session.note("group", **group.snapshot())
        generation = [0]

        def subroutine(s, g, eps):
            generation[0] += 1
            rep = pan_alg(s, g, eps, self.c_explore, self.costs, self.mode, self.c_est, generation[0])
            self.reports.append(rep)
            s.note("group", flags=rep.flags, swaptests=len(rep.swaptests), **rep.group.snapshot())
            return rep.group

        cfg = DoublingConfig(session.horizon, n, 7.0, subroutine, canonical_policy)
        return run_doubling(cfg, session, group)
