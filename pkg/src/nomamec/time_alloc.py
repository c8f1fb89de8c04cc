"""Time shares for fixed offloading data.

Every group carrying data receives the time at which its marginal energy saving
``-g'(t)`` equals a common price ``alpha``; ``alpha`` is bisected until the shares fill
the whole frame. Groups with no data get zero time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .energy import MAX_EXPONENT, PowerOverflowError
from .model import NomaGroup, ProblemInstance


@dataclass(frozen=True)
class TimeSolution:
    t: np.ndarray
    alpha: float
    outer_iterations: int
    inner_iterations: int
    alpha_trail: np.ndarray
    budget_trail: np.ndarray


def invert_g_prime(group: NomaGroup, d1: float, d2: float, B: float, target: float, backend: str | None = None) -> float:
    """Time share ``t`` with ``g_prime(group, d1, d2, B, t) == target``.

    ``g_prime`` increases from -inf to 0 on (0, inf), so only negative targets have a preimage.
    """
    s = d1 + d2
    if s <= 0.0:
        raise ValueError("inverse of g' needs d1 + d2 > 0")
    if not target < 0.0:
        raise ValueError("target outside range of g' (must be < 0)")
    x = kernels.solve_rate(
        np.array([group.a1]), np.array([group.a2]), np.array([d2 / s]), -target / B, backend=backend
    )[0]
    if x >= MAX_EXPONENT:
        raise PowerOverflowError("power overflow: target requires an unrepresentable rate")
    return s / (B * x)


def time_budget(instance: ProblemInstance, d: np.ndarray, alpha: float, backend: str | None = None) -> float:
    """Total time demanded by all groups at price ``alpha``."""
    arr = instance.arrays
    d = np.asarray(d, dtype=float)
    _, total = kernels.time_budget(arr.a1, arr.a2, d[:, 0] + d[:, 1], d[:, 1], instance.bandwidth, float(alpha), backend=backend)
    return float(total)


def solve_time(instance: ProblemInstance, d: np.ndarray, backend: str | None = None) -> TimeSolution:
    arr = instance.arrays
    d = np.asarray(d, dtype=float).reshape(-1, 2)
    s = d[:, 0] + d[:, 1]
    B = instance.bandwidth
    t, alpha, outer, inner, trail_a, trail_s = kernels.time_allocation(
        arr.a1, arr.a2, s, d[:, 1].copy(), B, instance.deadline, backend=backend
    )
    m = s > 0.0
    if np.any(s[m] / (B * t[m]) > MAX_EXPONENT):
        raise PowerOverflowError("power overflow: frame too short for the offloaded data")
    return TimeSolution(np.asarray(t), float(alpha), int(outer), int(inner), np.asarray(trail_a), np.asarray(trail_s))
