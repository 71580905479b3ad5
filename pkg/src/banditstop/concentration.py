"""Concentration radii: Hoeffding, DKW and Bernstein.

All logarithms are natural.  Each function returns the radius ``eps`` such
that the stated deviation exceeds ``eps`` with probability at most ``delta``.
"""

from __future__ import annotations

import math


def _check(n: int, delta: float) -> None:
    if n < 1:
        raise ValueError(f"need at least one sample, got n={n}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


def hoeffding_radius(n: int, width: float, delta: float) -> float:
    """Two-sided radius for the mean of n samples with range ``width``."""
    _check(n, delta)
    return width * math.sqrt(math.log(2.0 / delta) / (2.0 * n))


def dkw_radius(n: int, delta: float) -> float:
    """Uniform radius for an empirical CDF (Massart's constant)."""
    _check(n, delta)
    return math.sqrt(math.log(2.0 / delta) / (2.0 * n))


def bernstein_radius(n: int, variance: float, bound: float, delta: float) -> float:
    """Two-sided Bernstein radius for n samples with |Y - EY| <= bound.

    Solves ``n eps^2 = ln(2/delta) (2 variance + 2 bound eps / 3)`` for the
    larger root.
    """
    _check(n, delta)
    if variance < 0 or bound < 0:
        raise ValueError("variance and bound must be nonnegative")
    L = math.log(2.0 / delta)
    b = 2.0 * bound * L / 3.0
    return (b + math.sqrt(b * b + 8.0 * n * variance * L)) / (2.0 * n)


def samples_for_radius(width: float, eps: float, delta: float) -> int:
    """Smallest n whose Hoeffding radius is at most eps."""
    _check(1, delta)
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return math.ceil(width**2 * math.log(2.0 / delta) / (2.0 * eps**2))
