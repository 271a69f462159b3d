"""Bridge Rule training-size assignment, m = N / ln(N / K)."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np


class BridgeRuleError(ValueError):
    """The rule is undefined (requires N / K > e)."""


def bridge_value(N: float, K: float = 1) -> float:
    """Unrounded rule value N / ln(N / K)."""
    if K < 1:
        raise BridgeRuleError(f"parameter count K must be >= 1, got {K}")
    if N < 3:
        raise BridgeRuleError(f"sample size N must be >= 3, got {N}")
    ratio = N / K
    if ratio <= math.e:
        raise BridgeRuleError(
            f"N/K = {ratio:.4g} <= e: ln(N/K) <= 1 so the rule gives m >= N"
        )
    return N / math.log(ratio)


def bridge_m(N: int, K: int = 1, min_train: int | None = None) -> int:
    """Training size from the rule, rounded half up and clamped to [min_train, N-1].

    ``min_train`` defaults to ``K``; cases that estimate a variance pass a
    larger floor (the unknown-variance expectations need m >= 4).
    """
    value = bridge_value(N, K)
    floor = K if min_train is None else max(K, min_train)
    m = int(math.floor(value + 0.5))
    return max(floor, min(m, N - 1))


def bridge_linear_fit(N_grid: Sequence[float]) -> tuple[float, float]:
    """OLS line ``N / ln N ~ intercept + slope * N`` over the grid (K = 1)."""
    N = np.asarray(N_grid, dtype=float)
    if N.size < 2:
        raise BridgeRuleError("linear fit needs at least two grid points")
    if np.ptp(N) == 0:
        raise BridgeRuleError("degenerate grid: all N equal")
    if np.any(N <= math.e):
        raise BridgeRuleError("every grid point must exceed e")
    y = N / np.log(N)
    slope, intercept = np.polyfit(N, y, 1)
    return float(intercept), float(slope)
