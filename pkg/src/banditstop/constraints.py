"""Constraint groups, policy validity, and the policy conversion path.

A constraint group pairs one threshold interval per box with a transitively
closed set of order constraints (a, b), read as "a's reservation value
exceeds b's".  A Pandora policy is valid for a group when every threshold
sits in its box's interval, every constraint is respected by the order, and
thresholds are nonincreasing along the order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .environments import PandoraAction

TOL = 1e-12


class InvariantViolation(RuntimeError):
    """A constraint group lost validity (a statistics failure at desk scale)."""


@dataclass
class ConstraintGroup:
    lo: list
    hi: list
    edges: set = field(default_factory=set)

    def __post_init__(self):
        self.lo, self.hi = [float(x) for x in self.lo], [float(x) for x in self.hi]
        self.edges = set(map(tuple, self.edges))

    @property
    def n(self) -> int:
        return len(self.lo)

    def copy(self) -> "ConstraintGroup":
        return ConstraintGroup(list(self.lo), list(self.hi), set(self.edges))

    def ordered(self, a: int, b: int) -> bool:
        return (a, b) in self.edges or (b, a) in self.edges

    def predecessors(self, b: int) -> set:
        return {a for a, c in self.edges if c == b}

    def close(self) -> None:
        """Transitive closure (Warshall)."""
        n = self.n
        reach = [[(a, b) in self.edges for b in range(n)] for a in range(n)]
        for k in range(n):
            for a in range(n):
                if reach[a][k]:
                    row_k = reach[k]
                    row_a = reach[a]
                    for b in range(n):
                        if row_k[b]:
                            row_a[b] = True
        self.edges = {(a, b) for a in range(n) for b in range(n) if reach[a][b]}

    def tighten(self) -> bool:
        """Enforce interval dominance along every constraint; True if anything moved."""
        moved, changed = False, True
        while changed:
            changed = False
            for a, b in sorted(self.edges):
                if self.lo[b] > self.lo[a]:
                    self.lo[a], changed = self.lo[b], True
                if self.hi[a] < self.hi[b]:
                    self.hi[b], changed = self.hi[a], True
            moved |= changed
        return moved

    def add(self, a: int, b: int) -> None:
        """Add a > b, then close and tighten."""
        self.edges.add((a, b))
        self.close()
        self.tighten()
        self.check()

    def check(self) -> None:
        for i, (a, b) in enumerate(zip(self.lo, self.hi)):
            if a > b + TOL:
                raise InvariantViolation(f"empty interval for box {i}: [{a}, {b}]")
        for a, b in self.edges:
            if a == b or (b, a) in self.edges:
                raise InvariantViolation(f"cycle through {a} and {b}")
            if self.lo[a] < self.lo[b] - TOL or self.hi[a] < self.hi[b] - TOL:
                raise InvariantViolation(f"constraint ({a}, {b}) not dominated by intervals")
            for c in range(self.n):
                if (b, c) in self.edges and (a, c) not in self.edges:
                    raise InvariantViolation("constraints not transitively closed")

    def add_disjoint(self) -> list:
        """Order every pair whose intervals no longer overlap; returns new edges."""
        new = []
        for a in range(self.n):
            for b in range(self.n):
                if a != b and not self.ordered(a, b) and self.lo[a] > self.hi[b]:
                    self.edges.add((a, b))
                    new.append((a, b))
        if new:
            self.close()
            self.tighten()
        self.check()
        return new

    def snapshot(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "edges": sorted(self.edges)}

    def to_json(self) -> str:
        return json.dumps(self.snapshot())


def sort_boxes(boxes, thresholds, group: ConstraintGroup) -> list:
    """Decreasing threshold; ties by the constraints, then by lower box id.

    With a closed constraint set, a box that must precede another has
    strictly fewer predecessors, so the predecessor count orders ties.
    """
    rank = {k: len(group.predecessors(k)) for k in boxes}
    return sorted(boxes, key=lambda k: (-thresholds[k], rank[k], k))


def canonical_policy(group: ConstraintGroup) -> PandoraAction:
    """Every threshold at its lower end, boxes sorted accordingly."""
    order = sort_boxes(range(group.n), group.lo, group)
    return PandoraAction(tuple(order), tuple(group.lo))


def validate_policy(group: ConstraintGroup, policy: PandoraAction, tol: float = TOL) -> list[str]:
    """List every way ``policy`` breaks validity for ``group`` (empty if valid)."""
    out = []
    if sorted(policy.order) != list(range(group.n)):
        return [f"order {policy.order} is not a permutation"]
    pos = {k: p for p, k in enumerate(policy.order)}
    for k, t in enumerate(policy.thresholds):
        if not (group.lo[k] - tol <= t <= group.hi[k] + tol):
            out.append(f"threshold of box {k} = {t} outside [{group.lo[k]}, {group.hi[k]}]")
    for a, b in sorted(group.edges):
        if pos[a] > pos[b]:
            out.append(f"constraint ({a}, {b}) violated: {b} opened before {a}")
    seq = [policy.thresholds[k] for k in policy.order]
    for p in range(len(seq) - 1):
        if seq[p + 1] > seq[p] + tol:
            out.append(f"thresholds increase at position {p + 1}: {seq[p]} < {seq[p + 1]}")
    return out


# -- conversion between valid policies ------------------------------------------


@dataclass(frozen=True)
class Move:
    box: int
    before: float
    after: float


@dataclass(frozen=True)
class Swap:
    first: int  # the box that ends up in front
    second: int


def apply_op(policy: PandoraAction, op) -> PandoraAction:
    if isinstance(op, Move):
        th = list(policy.thresholds)
        th[op.box] = op.after
        return PandoraAction(policy.order, tuple(th))
    order = list(policy.order)
    a, b = order.index(op.first), order.index(op.second)
    if abs(a - b) != 1:
        raise ValueError("swap of non-adjacent boxes")
    order[a], order[b] = order[b], order[a]
    return PandoraAction(tuple(order), policy.thresholds)


def invert_op(op):
    return Move(op.box, op.after, op.before) if isinstance(op, Move) else Swap(op.second, op.first)


def path_from_canonical(group: ConstraintGroup, target: PandoraAction) -> list:
    """Moves and swaps turning the canonical policy into ``target``.

    Boxes are settled in target order.  The next box is raised to the
    threshold of the box in front of it, swapped past it (both then sit at
    that box's lower end), and so on until it reaches the settled prefix;
    finally it is moved to its target threshold.  At most n^2 moves and
    n^2 swaps.
    """
    problems = validate_policy(group, target)
    if problems:
        raise ValueError(f"invalid policy: {problems}")
    cur = canonical_policy(group)
    ops = []
    for settled, box in enumerate(target.order):
        while cur.order.index(box) > settled:
            pos = cur.order.index(box)
            front = cur.order[pos - 1]
            level = cur.thresholds[front]
            if cur.thresholds[box] != level:
                ops.append(Move(box, cur.thresholds[box], level))
                cur = apply_op(cur, ops[-1])
            ops.append(Swap(box, front))
            cur = apply_op(cur, ops[-1])
        if cur.thresholds[box] != target.thresholds[box]:
            ops.append(Move(box, cur.thresholds[box], target.thresholds[box]))
            cur = apply_op(cur, ops[-1])
    return ops


def convert_policy(group: ConstraintGroup, policy: PandoraAction) -> list:
    """Moves and swaps turning ``policy`` into the canonical policy."""
    return [invert_op(op) for op in reversed(path_from_canonical(group, policy))]


def intermediate_policies(start: PandoraAction, ops) -> list:
    out = [start]
    for op in ops:
        out.append(apply_op(out[-1], op))
    return out
