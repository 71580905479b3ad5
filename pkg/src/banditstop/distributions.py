"""Bounded distributions on [0, 1] and empirical CDF estimates.

A ``BoundedDistribution`` is a finite mixture of point masses and uniform
pieces (constant density on an interval).  Every quantity the learners and
the oracle need has a closed form for this family: CDF and its left limit,
mean, partial means, the integral of the CDF, and the expected excess
``E[(X - v)^+]`` together with its inverse.

``EmpiricalCdf`` wraps a sample and exposes the same interface, so the
learners can swap an estimate in wherever the truth would go.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ATOL = 1e-12


def _domain(x) -> np.ndarray:
    """Check that x lies in [0, 1]; +inf (the skip sentinel) is also allowed."""
    x = np.asarray(x, dtype=float)
    if np.any((x < -ATOL) | ((x > 1.0 + ATOL) & np.isfinite(x))):
        raise ValueError(f"argument outside [0, 1]: {x}")
    return x


class _CdfBase:
    """Shared machinery for anything with a CDF supported on [0, 1].

    Subclasses provide ``cdf``, ``cdf_left``, ``mean``, ``antiderivative``
    (the integral of the CDF from 0), ``breakpoints`` and ``piece_density``.
    """

    def integral_cdf(self, a, b):
        """Integral of the CDF over [a, b]."""
        if np.any(np.asarray(a) > np.asarray(b)):
            raise ValueError(f"integral_cdf needs a <= b, got {a} > {b}")
        return self.antiderivative(b) - self.antiderivative(a)

    def excess(self, v):
        """E[(X - v)^+], written as mean - v + int_0^v F."""
        v = np.asarray(v, dtype=float)
        out = self.mean - v + self.antiderivative(v)
        return np.maximum(out, 0.0) if out.ndim else float(max(out, 0.0))

    def gain(self, v, cost: float = 0.0):
        """Expected improvement from opening this box holding value v, net of cost."""
        return self.excess(v) - cost

    def excess_at_most(self, level: float):
        """Smallest v in [0, 1] with E[(X - v)^+] <= level, or None when empty."""
        if level < 0:
            return None
        if float(self.excess(0.0)) <= level:
            return 0.0
        pts = self.breakpoints()
        vals = self.excess(pts)
        # excess is zero from the top of the support on, up to rounding
        k = max(int(np.argmax(vals <= level + ATOL)), 1)
        lo, hi = float(pts[k - 1]), float(pts[k])
        a = float(self.excess(lo)) - level
        slope = float(self.cdf(lo)) - 1.0
        curv = self.piece_density(lo, hi)
        disc = max(slope * slope - 2.0 * curv * a, 0.0)
        denom = -slope + math.sqrt(disc)
        t = 0.0 if a <= 0 else (2.0 * a / denom if denom > 0 else hi - lo)
        return float(min(max(lo + t, lo), hi))

    def excess_at_least(self, level: float):
        """Largest v in [0, 1] with E[(X - v)^+] >= level, or None when empty.

        The excess is strictly decreasing wherever it is positive, so for a
        positive level this coincides with ``excess_at_most``.
        """
        if level <= 0:
            return 1.0
        if level > float(self.excess(0.0)):
            return None
        return self.excess_at_most(level)

    def reservation_value(self, cost: float) -> float:
        """The sigma solving E[(X - sigma)^+] = cost.

        Found on the piece where the excess crosses ``cost``.  A free box
        (cost 0) gets the top of its support, the smallest root.
        """
        if cost < 0:
            raise ValueError(f"cost must be nonnegative, got {cost}")
        if cost > self.mean + ATOL:
            raise ValueError(f"no root: cost {cost} exceeds E[X] = {self.mean}")
        return self.excess_at_most(min(cost, self.mean))


@dataclass(frozen=True)
class BoundedDistribution(_CdfBase):
    """Mixture of atoms ``(loc, mass)`` and uniform pieces ``(lo, hi, density)``."""

    atoms: tuple = ()
    segments: tuple = ()
    _arr: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        atoms = tuple((float(a), float(m)) for a, m in self.atoms)
        segs = tuple((float(lo), float(hi), float(d)) for lo, hi, d in self.segments)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "segments", segs)
        total = 0.0
        for loc, m in atoms:
            if not (0.0 <= loc <= 1.0) or m < 0:
                raise ValueError(f"bad atom {loc}:{m}")
            total += m
        for lo, hi, d in segs:
            if not (0.0 <= lo < hi <= 1.0) or d < 0:
                raise ValueError(f"bad segment {lo}:{hi}:{d}")
            total += d * (hi - lo)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"total mass {total} != 1")
        if any(b[0] <= a[0] for a, b in zip(atoms, atoms[1:])):
            raise ValueError("atom locations must be strictly increasing")
        if any(b[0] < a[1] for a, b in zip(segs, segs[1:])):
            raise ValueError("segments must be sorted and disjoint")
        arr = {
            "aloc": np.array([a for a, _ in atoms], dtype=float),
            "amass": np.array([m for _, m in atoms], dtype=float),
            "slo": np.array([s[0] for s in segs], dtype=float),
            "shi": np.array([s[1] for s in segs], dtype=float),
            "sden": np.array([s[2] for s in segs], dtype=float),
        }
        object.__setattr__(self, "_arr", arr)
        pts = self.breakpoints()
        arr["qpts"] = pts
        arr["qright"] = self.cdf(pts)
        arr["qleft"] = self.cdf_left(pts)
        arr["qden"] = np.array([self.piece_density(a, b) for a, b in zip(pts[:-1], pts[1:])])

    # -- constructors -------------------------------------------------------

    @classmethod
    def atom(cls, loc: float) -> "BoundedDistribution":
        return cls(atoms=((loc, 1.0),))

    @classmethod
    def uniform(cls, lo: float = 0.0, hi: float = 1.0) -> "BoundedDistribution":
        return cls(segments=((lo, hi, 1.0 / (hi - lo)),))

    @classmethod
    def discrete(cls, locs, masses) -> "BoundedDistribution":
        return cls(atoms=tuple(zip(locs, masses)))

    @property
    def is_atomic(self) -> bool:
        return not self.segments

    # -- closed forms -------------------------------------------------------

    def _cont(self, x):
        a = self._arr
        x = _domain(x)
        w = np.clip(x[..., None] - a["slo"], 0.0, a["shi"] - a["slo"])
        return (w * a["sden"]).sum(axis=-1)

    def cdf(self, x):
        a = self._arr
        x = np.asarray(x, dtype=float)
        out = (a["amass"] * (a["aloc"] <= x[..., None])).sum(axis=-1) + self._cont(x)
        return np.minimum(out, 1.0) if out.ndim else float(min(out, 1.0))

    def cdf_left(self, x):
        """P(X < x)."""
        a = self._arr
        x = np.asarray(x, dtype=float)
        out = (a["amass"] * (a["aloc"] < x[..., None])).sum(axis=-1) + self._cont(x)
        return np.minimum(out, 1.0) if out.ndim else float(min(out, 1.0))

    @property
    def mean(self) -> float:
        a = self._arr
        return float(
            (a["aloc"] * a["amass"]).sum()
            + (a["sden"] * (a["shi"] ** 2 - a["slo"] ** 2) / 2).sum()
        )

    def partial_mean_above(self, tau: float) -> float:
        """E[X * 1{X >= tau}]."""
        a = self._arr
        out = float((a["aloc"] * a["amass"] * (a["aloc"] >= tau)).sum())
        lo = np.minimum(np.maximum(a["slo"], tau), a["shi"])
        out += float((a["sden"] * (a["shi"] ** 2 - lo**2) / 2).sum())
        return out

    def antiderivative(self, x):
        """int_0^x F(t) dt."""
        a = self._arr
        x = np.asarray(x, dtype=float)
        xe = x[..., None]
        out = (a["amass"] * np.maximum(xe - a["aloc"], 0.0)).sum(axis=-1)
        w = a["shi"] - a["slo"]
        inside = np.clip(xe - a["slo"], 0.0, w)
        past = np.maximum(xe - a["shi"], 0.0)
        out = out + (a["sden"] * (inside**2 / 2 + w * past)).sum(axis=-1)
        return out if out.ndim else float(out)

    def breakpoints(self) -> np.ndarray:
        a = self._arr
        pts = np.concatenate([[0.0, 1.0], a["aloc"], a["slo"], a["shi"]])
        return np.unique(np.clip(pts, 0.0, 1.0))

    def piece_density(self, lo: float, hi: float) -> float:
        a = self._arr
        mid = 0.5 * (lo + hi)
        return float((a["sden"] * ((a["slo"] <= mid) & (mid < a["shi"]))).sum())

    # -- sampling and transforms ---------------------------------------------

    def transform(self, u: np.ndarray) -> np.ndarray:
        """Inverse CDF: map uniforms in [0, 1) to samples."""
        a = self._arr
        pts, right, left, den = a["qpts"], a["qright"], a["qleft"], a["qden"]
        # u = 0 maps to the bottom of the support, not to 0
        u = np.maximum(np.asarray(u, dtype=float), np.finfo(float).tiny)
        k = np.minimum(np.searchsorted(right, u, side="left"), len(pts) - 1)
        on_atom = (left[k] < u) | (k == 0)
        km = np.maximum(k - 1, 0)
        d = den[np.minimum(km, len(den) - 1)] if len(den) else np.zeros_like(u)
        with np.errstate(divide="ignore", invalid="ignore"):
            inner = pts[km] + (u - right[km]) / d
        out = np.where(on_atom, pts[k], inner)
        return np.clip(out, np.where(on_atom, pts[k], pts[km]), pts[k])

    def sample(self, rng: np.random.Generator, size=None):
        return self.transform(rng.random(size))

    def scale(self, k: float) -> "BoundedDistribution":
        """Distribution of k * X."""
        return BoundedDistribution(
            atoms=tuple((loc * k, m) for loc, m in self.atoms),
            segments=tuple((lo * k, hi * k, d / k) for lo, hi, d in self.segments),
        )

    def support_points(self) -> np.ndarray:
        return np.unique(self._arr["aloc"])


class EmpiricalCdf(_CdfBase):
    """Empirical CDF of a sample, with the same closed forms as the truth."""

    def __init__(self, samples, generation: int | None = None):
        xs = np.sort(np.asarray(samples, dtype=float).ravel())
        if xs.size == 0:
            raise ValueError("empty sample")
        self.xs = xs
        self.n = xs.size
        self.generation = generation
        self._csum = np.concatenate([[0.0], np.cumsum(xs)])
        self._mean = float(self._csum[-1] / self.n)

    def cdf(self, x):
        out = np.searchsorted(self.xs, x, side="right") / self.n
        return out if np.ndim(out) else float(out)

    def cdf_left(self, x):
        out = np.searchsorted(self.xs, x, side="left") / self.n
        return out if np.ndim(out) else float(out)

    @property
    def mean(self) -> float:
        return self._mean

    def partial_mean_above(self, tau: float) -> float:
        k = np.searchsorted(self.xs, tau, side="left")
        return float((self._csum[-1] - self._csum[k]) / self.n)

    def antiderivative(self, x):
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(self.xs, x, side="right")
        out = (k * x - self._csum[k]) / self.n
        return out if out.ndim else float(out)

    def breakpoints(self) -> np.ndarray:
        return np.unique(np.concatenate([[0.0, 1.0], np.clip(self.xs, 0.0, 1.0)]))

    def piece_density(self, lo: float, hi: float) -> float:
        return 0.0


def integrate_piecewise(fn, a: float, b: float, breakpoints, degree: int) -> float:
    """Integrate fn over [a, b] when fn is a polynomial of the given degree
    between consecutive breakpoints.

    Gauss-Legendre with enough nodes is exact on each piece, so the result
    is exact up to rounding.
    """
    if b <= a:
        return 0.0
    bp = np.asarray(breakpoints, dtype=float)
    inner = bp[(bp > a) & (bp < b)]
    edges = np.concatenate([[a], np.unique(inner), [b]])
    lo, hi = edges[:-1], edges[1:]
    nodes, weights = np.polynomial.legendre.leggauss(degree // 2 + 1)
    half = (hi - lo)[:, None] / 2
    x = (lo + hi)[:, None] / 2 + half * nodes[None, :]
    vals = fn(x.ravel()).reshape(x.shape)
    return float((half * weights[None, :] * vals).sum())


# -- instance text format -----------------------------------------------------


def _fields(line: str) -> dict:
    out = {}
    for part in line.split(";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"malformed field {part!r}")
        key, val = part.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def parse_box(line: str) -> tuple[BoundedDistribution, float | None]:
    """Parse ``atoms= loc:mass,... ; segments= lo:hi:density,... ; cost= c``."""
    f = _fields(line)
    unknown = set(f) - {"atoms", "segments", "cost"}
    if unknown:
        raise ValueError(f"unknown fields {sorted(unknown)}")
    atoms = [tuple(map(float, t.split(":"))) for t in f.get("atoms", "").split(",") if t.strip()]
    segs = [tuple(map(float, t.split(":"))) for t in f.get("segments", "").split(",") if t.strip()]
    if any(len(t) != 2 for t in atoms) or any(len(t) != 3 for t in segs):
        raise ValueError(f"malformed box line {line!r}")
    cost = float(f["cost"]) if "cost" in f and f["cost"] else None
    return BoundedDistribution(atoms=tuple(atoms), segments=tuple(segs)), cost


def parse_instance_text(text: str) -> tuple[list[BoundedDistribution], list[float] | None]:
    """Parse one box per non-blank line; '#' starts a comment."""
    dists, costs = [], []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        d, c = parse_box(line)
        dists.append(d)
        costs.append(c)
    if not dists:
        raise ValueError("instance has no boxes")
    if all(c is None for c in costs):
        return dists, None
    if any(c is None for c in costs):
        raise ValueError("either every box has a cost or none does")
    return dists, costs


def format_box(d: BoundedDistribution, cost: float | None = None) -> str:
    atoms = ",".join(f"{loc!r}:{m!r}" for loc, m in d.atoms)
    segs = ",".join(f"{lo!r}:{hi!r}:{den!r}" for lo, hi, den in d.segments)
    line = f"atoms= {atoms} ; segments= {segs}"
    if cost is not None:
        line += f" ; cost= {cost!r}"
    return line


def format_instance(dists, costs=None) -> str:
    costs = costs if costs is not None else [None] * len(dists)
    return "\n".join(format_box(d, c) for d, c in zip(dists, costs)) + "\n"
