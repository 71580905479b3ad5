"""Exact ground truth for both problems.

Everything here sees the true distributions.  The learners never import
this module; the harness uses it to score actions, and the tests use it to
check the learners' estimators.

Conventions: a threshold is met with ``>=``, so the probability of
continuing past a value is the left limit ``P(X < tau)``.  With that choice
the bounding-function identities hold exactly even when the distributions
have atoms.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .distributions import integrate_piecewise
from .environments import (
    ABOVE,
    PandoraAction,
    PandoraInstance,
    ProphetAction,
    ProphetInstance,
    simulate_pandora,
)

# -- prophet ------------------------------------------------------------------


def prophet_suffix_values(inst: ProphetInstance, thresholds) -> list[float]:
    """W_i = expected reward from value i onward; W_n = E[X_n]."""
    n = inst.n
    w = [0.0] * n
    w[-1] = inst.dists[-1].mean
    for i in range(n - 2, -1, -1):
        d, t = inst.dists[i], thresholds[i]
        w[i] = d.partial_mean_above(t) + d.cdf_left(t) * w[i + 1]
    return w


def prophet_expected_reward(inst: ProphetInstance, action: ProphetAction) -> float:
    """Expected reward of a threshold vector."""
    action.validate(inst.n)
    return prophet_suffix_values(inst, action.thresholds)[0]


def prophet_opt(inst: ProphetInstance) -> tuple[float, tuple]:
    """Optimal expected reward and thresholds (tau_i = Opt_{i+1})."""
    n = inst.n
    opt = [0.0] * n
    opt[-1] = inst.dists[-1].mean
    for i in range(n - 2, -1, -1):
        d, t = inst.dists[i], opt[i + 1]
        opt[i] = d.partial_mean_above(t) + d.cdf_left(t) * t
    return opt[0], tuple(opt[1:])


def prophet_bounds(inst: ProphetInstance, i: int, prefix, suffix, lo: float, hi: float, tau: float) -> tuple[float, float]:
    """Bounding function and its gap for moving threshold i inside [lo, hi].

    ``prefix`` holds thresholds for values before i, ``suffix`` those after.
    Returns ``(Delta(tau), delta(tau))`` where
    ``delta = Delta - (R(hi) - R(lo))`` and
    ``delta = P_i (F_i(hi) - F_i(lo)) (tau - W_{i+1})``.
    """
    d = inst.dists[i]
    reach = float(np.prod([inst.dists[j].cdf_left(t) for j, t in enumerate(prefix)])) if prefix else 1.0
    fu, fl = d.cdf_left(hi), d.cdf_left(lo)
    big = reach * (fu * (tau - hi) - fl * (tau - lo) + d.integral_cdf(lo, hi))
    full = list(prefix) + [tau] + list(suffix)
    nxt = prophet_suffix_values(inst, full)[i + 1]
    small = reach * (fu - fl) * (tau - nxt)
    return big, small


# -- Pandora ------------------------------------------------------------------


def _max_cdf(dists, left: bool):
    """CDF (or left limit) of the max of independent values, as a callable."""

    def f(x):
        out = np.ones_like(np.asarray(x, dtype=float))
        for d in dists:
            out = out * (d.cdf_left(x) if left else d.cdf(x))
        return out

    return f


def reach_probability(inst: PandoraInstance, action: PandoraAction, i: int, x: float) -> float:
    """P(every box opened before i is below x) under the action's order."""
    pos = action.order.index(i)
    return float(_max_cdf([inst.dists[k] for k in action.order[:pos]], True)(x))


def _expected_gain_below(front, d, cost: float, tau: float) -> float:
    """E[1{M < tau} g(M)] for M the max of ``front`` and g the gain of d."""
    bp = np.unique(np.concatenate([[0.0, 1.0]] + [f.breakpoints() for f in front] + [d.breakpoints()]))
    cdf_m = _max_cdf(front, False)
    top = min(tau, 1.0)
    edge = float(cdf_m(1.0)) if tau > 1.0 else float(_max_cdf(front, True)(tau))
    integral = integrate_piecewise(lambda x: cdf_m(x) * (d.cdf(x) - 1.0), 0.0, top, bp, len(front) + 1)
    return float(d.gain(top, cost)) * edge - integral


def pandora_utility_formula(inst: PandoraInstance, action: PandoraAction) -> float:
    """Closed form for policies with nonincreasing thresholds, any piecewise instance.

    Opening box p adds g_p(M) in expectation, where M is the best value so far,
    and box p is opened exactly when M < tau_p.
    """
    action.validate(inst.n)
    order = action.order
    first = order[0]
    total = inst.dists[first].mean - inst.costs[first]
    for p in range(1, inst.n):
        k = order[p]
        front = [inst.dists[j] for j in order[:p]]
        total += _expected_gain_below(front, inst.dists[k], inst.costs[k], action.thresholds[k])
    return total


def joint_support(inst: PandoraInstance, limit: int = 1_000_000) -> tuple[np.ndarray, np.ndarray]:
    """Every joint outcome of an atom-only instance with its probability."""
    if any(not d.is_atomic for d in inst.dists):
        raise ValueError("enumeration needs atom-only distributions")
    size = math.prod(len(d.atoms) for d in inst.dists)
    if size > limit:
        raise ValueError(f"joint support {size} exceeds {limit}")
    locs = [np.array([a for a, _ in d.atoms]) for d in inst.dists]
    probs = [np.array([m for _, m in d.atoms]) for d in inst.dists]
    grid = np.stack([g.ravel() for g in np.meshgrid(*locs, indexing="ij")], axis=1)
    pgrid = np.prod(np.stack([g.ravel() for g in np.meshgrid(*probs, indexing="ij")], axis=1), axis=1)
    return grid, pgrid


def pandora_utility_enumerate(inst: PandoraInstance, action: PandoraAction, support=None, monotone: bool = True) -> float:
    """Exact utility by summing over the joint support (atom-only instances)."""
    action.validate(inst.n, monotone=monotone)
    grid, p = support if support is not None else joint_support(inst)
    util, _ = simulate_pandora(grid, inst.costs, action.order, action.thresholds)
    return float(util @ p)


def pandora_utility_monte_carlo(inst: PandoraInstance, action: PandoraAction, rng, samples: int = 200_000) -> tuple[float, float]:
    """Mean utility and its standard error from simulated rounds."""
    action.validate(inst.n, monotone=False)
    u = rng.random((samples, inst.n))
    x = np.column_stack([d.transform(u[:, i]) for i, d in enumerate(inst.dists)])
    util, _ = simulate_pandora(x, inst.costs, action.order, action.thresholds)
    return float(util.mean()), float(util.std(ddof=1) / math.sqrt(samples))


def pandora_expected_utility(inst: PandoraInstance, action: PandoraAction) -> float:
    """Exact expected utility: enumeration for small atom instances, else closed form."""
    if all(d.is_atomic for d in inst.dists) and math.prod(len(d.atoms) for d in inst.dists) <= 4096:
        return pandora_utility_enumerate(inst, action)
    return pandora_utility_formula(inst, action)


def reservation_values(inst: PandoraInstance) -> tuple[float, ...]:
    return tuple(d.reservation_value(c) for d, c in zip(inst.dists, inst.costs))


def weitzman(inst: PandoraInstance) -> tuple[PandoraAction, float]:
    """Index policy: open by decreasing reservation value, stop once the best
    value meets the next index.  Ties go to the lower box id."""
    sigma = reservation_values(inst)
    order = sorted(range(inst.n), key=lambda i: (-sigma[i], i))
    action = PandoraAction(tuple(order), sigma)
    return action, pandora_expected_utility(inst, action)


def one_round_regret(inst, action) -> float:
    """Benchmark value minus the expected value of one round of ``action``."""
    if isinstance(inst, ProphetInstance):
        return prophet_opt(inst)[0] - prophet_expected_reward(inst, action)
    return weitzman(inst)[1] - pandora_expected_utility(inst, action)


def pandora_brute_force(inst: PandoraInstance) -> tuple[PandoraAction, float]:
    """Best order and threshold vector over support-point grids (atom instances).

    Every order is tried, and every box after the first takes any threshold
    from the pooled support points plus 0 and ABOVE.
    """
    support = joint_support(inst)
    pts = np.unique(np.concatenate([[0.0], support[0].ravel()])).tolist() + [ABOVE]
    best, best_action = -math.inf, None
    for order in itertools.permutations(range(inst.n)):
        for rest in itertools.product(pts, repeat=inst.n - 1):
            th = [0.0] * inst.n
            th[order[0]] = ABOVE
            for k, t in zip(order[1:], rest):
                th[k] = t
            action = PandoraAction(order, tuple(th))
            val = pandora_utility_enumerate(inst, action, support, monotone=False)
            if val > best:
                best, best_action = val, action
    return best_action, best


def swap_difference(inst: PandoraInstance, action: PandoraAction, i: int, j: int) -> float:
    """U(i just before j) - U(j just before i) when both share threshold tau.

    Equals ``F_reach(tau) (g_i(tau) P(X_j >= tau) - g_j(tau) P(X_i >= tau))``,
    so a positive value means opening i first is better.
    """
    pos_i, pos_j = action.order.index(i), action.order.index(j)
    if abs(pos_i - pos_j) != 1:
        raise ValueError("boxes must be adjacent")
    tau = action.thresholds[i]
    if action.thresholds[j] != tau:
        raise ValueError("boxes must share a threshold")
    front = [inst.dists[k] for k in action.order[: min(pos_i, pos_j)]]
    reach = float(_max_cdf(front, True)(tau))
    di, dj = inst.dists[i], inst.dists[j]
    gi, gj = float(di.gain(tau, inst.costs[i])), float(dj.gain(tau, inst.costs[j]))
    return reach * (gi * (1.0 - dj.cdf_left(tau)) - gj * (1.0 - di.cdf_left(tau)))


def swapped(action: PandoraAction, i: int, j: int) -> PandoraAction:
    order = list(action.order)
    a, b = order.index(i), order.index(j)
    order[a], order[b] = order[b], order[a]
    return PandoraAction(tuple(order), action.thresholds)


def pandora_bounds(inst: PandoraInstance, action: PandoraAction, i: int, lo: float, hi: float, tau: float) -> tuple[float, float]:
    """Bounding function and its gap for moving box i's threshold inside [lo, hi].

    Requires every threshold before i to be >= hi and every one after i to be
    <= lo.  Returns ``(Delta(tau), delta(tau))`` with
    ``delta = Delta - (U(hi) - U(lo)) = -(F_reach(hi) - F_reach(lo)) g_i(tau)``.
    """
    pos = action.order.index(i)
    front = [inst.dists[k] for k in action.order[:pos]]
    d, c = inst.dists[i], inst.costs[i]
    left = _max_cdf(front, True)
    ru, rl = float(left(hi)), float(left(lo))
    g = lambda v: float(d.gain(v, c))
    bp = np.unique(np.concatenate([[0.0, 1.0]] + [f.breakpoints() for f in front] + [d.breakpoints()]))
    right = _max_cdf(front, False)
    cross = integrate_piecewise(lambda x: right(x) * (d.cdf(x) - 1.0), lo, hi, bp, len(front) + 1)
    big = ru * (g(hi) - g(tau)) + rl * (g(tau) - g(lo)) - cross
    small = -(ru - rl) * g(tau)
    return big, small
