"""Reach-gap maximization: Problem A and the MoveBound search.

Problem A: choose a set B closed under implications (i in B forces j in B)
maximizing prod_B b - prod_B a, with 0 <= a <= b <= 1.  The exact solver
enumerates subsets; the approximate one scores only the implication
closures of single elements, which loses at most a factor n.

MoveBound: for box i, pick which other boxes sit in front of it (at their
upper thresholds) so that the probability of reaching i with a running max
between two admissible thresholds l and u is as large as possible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constraints import ConstraintGroup, sort_boxes, validate_policy
from .environments import PandoraAction


@dataclass
class ProblemAInstance:
    a: list
    b: list
    implications: set = field(default_factory=set)  # (i, j): i in B forces j in B
    required: set = field(default_factory=set)
    forbidden: set = field(default_factory=set)

    def __post_init__(self):
        if len(self.a) != len(self.b):
            raise ValueError("a and b must have equal length")
        for x, y in zip(self.a, self.b):
            if not (0.0 <= x <= y <= 1.0 + 1e-12):
                raise ValueError(f"need 0 <= a <= b <= 1, got {x}, {y}")

    @property
    def n(self) -> int:
        return len(self.a)

    def value(self, B) -> float:
        B = list(B)
        return float(np.prod([self.b[k] for k in B]) - np.prod([self.a[k] for k in B]))


def _subset_table(n: int):
    masks = np.arange(1 << n, dtype=np.int64)
    member = ((masks[:, None] >> np.arange(n)) & 1).astype(bool)
    return masks, member


def _feasible(member: np.ndarray, implications, required, forbidden) -> np.ndarray:
    ok = np.ones(member.shape[0], dtype=bool)
    for i, j in implications:
        ok &= ~member[:, i] | member[:, j]
    for k in required:
        ok &= member[:, k]
    for k in forbidden:
        ok &= ~member[:, k]
    return ok


def problem_a_exact(inst: ProblemAInstance, limit: int = 20) -> tuple[set | None, float]:
    """Best feasible set by enumeration; (None, -inf) when nothing is feasible."""
    if inst.n > limit:
        raise ValueError(f"exact Problem A limited to n <= {limit}")
    _, member = _subset_table(inst.n)
    ok = _feasible(member, inst.implications, inst.required, inst.forbidden)
    a, b = np.asarray(inst.a, float), np.asarray(inst.b, float)
    val = np.prod(np.where(member, b, 1.0), axis=1) - np.prod(np.where(member, a, 1.0), axis=1)
    val = np.where(ok, val, -np.inf)
    k = int(np.argmax(val))
    if not np.isfinite(val[k]):
        return None, -np.inf
    return set(np.flatnonzero(member[k]).tolist()), float(val[k])


def closure(seeds, implications, n: int) -> set:
    """Everything forced by ``seeds`` under the implications (graph reachability)."""
    adj = {k: [] for k in range(n)}
    for i, j in implications:
        adj[i].append(j)
    out, stack = set(seeds), list(seeds)
    while stack:
        for j in adj[stack.pop()]:
            if j not in out:
                out.add(j)
                stack.append(j)
    return out


def problem_a_approx(inst: ProblemAInstance) -> tuple[set | None, float]:
    """Best implication closure of one element (plus the required set).

    Elements on a common cycle share a closure, so this is the same as
    scoring the strongly connected components of the implication graph.
    """
    cands = [closure(inst.required, inst.implications, inst.n)]
    cands += [closure({j} | set(inst.required), inst.implications, inst.n) for j in range(inst.n) if j not in inst.forbidden]
    best, best_val = None, -np.inf
    for B in cands:
        if B & set(inst.forbidden):
            continue
        v = inst.value(B)
        if v > best_val:
            best, best_val = B, v
    return best, best_val


# -- MoveBound --------------------------------------------------------------------


@dataclass
class MoveBoundResult:
    """A policy with box i's threshold left free, valid at both ``lo`` and ``hi``."""

    box: int
    order: tuple
    thresholds: tuple  # box i's entry is a placeholder
    lo: float
    hi: float
    reach_gap: float
    front: tuple
    flags: list = field(default_factory=list)

    def policy(self, tau: float) -> PandoraAction:
        th = list(self.thresholds)
        th[self.box] = tau
        return PandoraAction(self.order, tuple(th))


def _left_product(fhat, boxes, x: float) -> float:
    return float(np.prod([fhat[k].cdf_left(x) for k in boxes])) if boxes else 1.0


def _build(group: ConstraintGroup, i: int, front, fhat, flags=None) -> MoveBoundResult:
    others = [k for k in range(group.n) if k != i]
    back = [k for k in others if k not in front]
    hi = min([group.hi[i]] + [group.hi[k] for k in front])
    lo = max([group.lo[i]] + [group.lo[k] for k in back])
    th = [0.0] * group.n
    for k in front:
        th[k] = group.hi[k]
    for k in back:
        th[k] = group.lo[k]
    th[i] = lo
    order = sort_boxes(list(front), th, group) + [i] + sort_boxes(back, th, group)
    gap = _left_product(fhat, front, hi) - _left_product(fhat, front, lo)
    return MoveBoundResult(i, tuple(order), tuple(th), lo, hi, gap, tuple(sorted(front)), list(flags or []))


def _admissible_front(group: ConstraintGroup, i: int, front: set) -> bool:
    for a, b in group.edges:
        if b == i and a not in front:
            return False
        if a == i and b in front:
            return False
        if b in front and a != i and a not in front:
            return False
    return True


def find_movebound(group: ConstraintGroup, i: int, fhat, mode: str = "exact", limit: int = 16) -> MoveBoundResult:
    """Front set for box i maximizing the estimated reach gap.

    ``fhat`` holds one CDF (true or estimated) per box.  Exact mode
    enumerates every admissible front set; approx mode tries the endpoint
    pairs and solves the induced Problem A approximately.
    """
    if mode == "exact":
        res = _movebound_exact(group, i, fhat, limit)
    elif mode == "approx":
        res = _movebound_approx(group, i, fhat)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if res is None:
        lo = hi = group.lo[i]
        res = _build(group, i, {a for a, b in group.edges if b == i}, fhat, ["no-admissible-front"])
        res.reach_gap = 0.0
        res.lo, res.hi = lo, hi
    if res.reach_gap <= 0:
        res.flags.append("zero-gap")
    for tau in (res.lo, res.hi):
        problems = validate_policy(group, res.policy(tau))
        if problems and "no-admissible-front" not in res.flags:
            raise AssertionError(f"MoveBound policy invalid: {problems}")
    return res


def _movebound_exact(group: ConstraintGroup, i: int, fhat, limit: int):
    n = group.n
    if n > limit:
        raise ValueError(f"exact MoveBound limited to n <= {limit}")
    others = np.array([k for k in range(n) if k != i], dtype=int)
    m = len(others)
    pos = {int(k): p for p, k in enumerate(others)}
    _, member = _subset_table(m)
    ok = np.ones(member.shape[0], dtype=bool)
    for a, b in group.edges:
        if b == i:
            ok &= member[:, pos[a]]
        elif a == i:
            ok &= ~member[:, pos[b]]
        else:
            ok &= ~member[:, pos[b]] | member[:, pos[a]]
    hi_o = np.array([group.hi[k] for k in others])
    lo_o = np.array([group.lo[k] for k in others])
    hi = np.minimum(group.hi[i], np.where(member, hi_o, np.inf).min(axis=1, initial=np.inf))
    lo = np.maximum(group.lo[i], np.where(member, -np.inf, lo_o).max(axis=1, initial=-np.inf))
    ok &= hi >= lo
    if not ok.any():
        return None
    # every endpoint is one of at most n values, so tabulate the left CDFs there
    pts = np.unique(np.concatenate([hi[ok], lo[ok]]))
    table = np.array([[fhat[k].cdf_left(x) for k in others] for x in pts])
    f_hi = table[np.searchsorted(pts, hi[ok])]
    f_lo = table[np.searchsorted(pts, lo[ok])]
    mem = member[ok]
    gap = np.prod(np.where(mem, f_hi, 1.0), axis=1) - np.prod(np.where(mem, f_lo, 1.0), axis=1)
    best = int(np.argmax(gap))
    front = {int(k) for k in others[mem[best]]}
    return _build(group, i, front, fhat)


def _movebound_approx(group: ConstraintGroup, i: int, fhat):
    n = group.n
    others = [k for k in range(n) if k != i]
    li, ui = group.lo[i], group.hi[i]
    his = sorted({ui} | {group.hi[k] for k in others if li <= group.hi[k] <= ui})
    los = sorted({li} | {group.lo[k] for k in others if li <= group.lo[k] <= ui})
    must = {a for a, b in group.edges if b == i}
    never = {b for a, b in group.edges if a == i}
    # k in the front set forces every box constrained ahead of k into it
    implications = {(b, a) for a, b in group.edges if a != i and b != i}
    best = None
    for u in his:
        for l in los:
            if l > u:
                continue
            req = must | {k for k in others if group.lo[k] > l}
            forb = never | {k for k in others if group.hi[k] < u}
            if req & forb:
                continue
            idx = {k: p for p, k in enumerate(others)}
            inst = ProblemAInstance(
                [fhat[k].cdf_left(l) for k in others],
                [fhat[k].cdf_left(u) for k in others],
                {(idx[a], idx[b]) for a, b in implications},
                {idx[k] for k in req},
                {idx[k] for k in forb},
            )
            B, _ = problem_a_approx(inst)
            if B is None:
                continue
            front = {others[p] for p in B}
            if not _admissible_front(group, i, front):
                continue
            res = _build(group, i, front, fhat)
            if res.hi >= res.lo and (best is None or res.reach_gap > best.reach_gap):
                best = res
    return best
