"""Closed-form bounds from the Darwinism theorems.

Logarithms are base 2; the ``ln 2`` factors that convert to bits are
carried explicitly.
"""
from __future__ import annotations

import numpy as np

from ..errors import ValidationError

LN2 = float(np.log(2.0))


def _check(d_A: int, n: float, delta: float) -> None:
    if d_A < 2:
        raise ValidationError(f"d_A must be at least 2, got {d_A}")
    if n < 1:
        raise ValidationError(f"n must be at least 1, got {n}")
    if not 0.0 < delta <= 1.0:
        raise ValidationError(f"delta must lie in (0, 1], got {delta}")


def theorem1_bound(d_A: int, n: float, delta: float) -> float:
    """``(27 ln2 d_A^6 log2 d_A / (n δ^3))^{1/3}``."""
    _check(d_A, n, delta)
    return float(np.cbrt(27.0 * LN2 * d_A**6 * np.log2(d_A) / (n * delta**3)))


def theorem2_bound(d_A: int, n: float, t: int, delta: float) -> float:
    """Subset version: :func:`theorem1_bound` times ``t^{1/3}``."""
    _check(d_A, n, delta)
    if not 1 <= t <= n:
        raise ValidationError(f"t must satisfy 1 <= t <= n, got t={t}, n={n}")
    return theorem1_bound(d_A, n, delta) * float(np.cbrt(t))


def is_vacuous(bound: float) -> bool:
    """Diamond distances never exceed 2, so larger bounds say nothing."""
    return bound >= 2.0


def average_bound(d_A: int, n: int, k: int, t: int = 1) -> float:
    """``sqrt(2 ln2 d_A^6 log2 d_A / k) + 2kt/n``: mean distance over all fragments (or blocks)."""
    if k < 1:
        return float("inf")
    return float(np.sqrt(2.0 * LN2 * d_A**6 * np.log2(d_A) / k) + 2.0 * k * t / n)


def chain_bound(d_A: int, cmi: float) -> float:
    """``d_A^3 sqrt(2 ln2 · cmi)``: per-fragment diamond bound from a measured conditional MI."""
    return float(d_A**3 * np.sqrt(2.0 * LN2 * max(cmi, 0.0)))


def optimal_k(d_A: int, n: int, t: int = 1) -> int:
    """Integer ``k`` minimizing :func:`average_bound` over ``1 <= k < n/t``."""
    top = max(1, n // t - 1)
    ks = np.arange(1, top + 1)
    vals = [average_bound(d_A, n, int(k), t) for k in ks]
    return int(ks[int(np.argmin(vals))])


def broadcast_epsilon(d_B: int, n: float, delta: float) -> float:
    """``ε = 2 (27 ln2 d_B^6 log2 d_B / (n δ^3))^{1/3}`` of the discord corollary."""
    return 2.0 * theorem1_bound(d_B, n, delta)
