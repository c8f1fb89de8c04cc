"""Offloaded bits for fixed time shares.

For a cloud price ``beta`` each group's data subproblem is a strictly convex function
on a box; its exact minimizer is found by checking the stationary point and the four
edge minimizers (each has a closed form). ``beta`` is then bisected so the cloud load
meets the capacity whenever the unpriced optimum would exceed it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .energy import LN2
from .model import NomaGroup, ProblemInstance, min_offload_bits


class NoTimeForMandatoryData(ValueError):
    """A group with zero time has users that must offload."""


@dataclass(frozen=True)
class DataSolution:
    d: np.ndarray
    beta: float
    search_iterations: int


def _priced_group_energy(group: NomaGroup, c: float, beta: float, d1: float, d2: float) -> float:
    u1, u2 = group.users
    k1 = (u1.energy_per_cycle - beta) * u1.cycles_per_bit
    k2 = (u2.energy_per_cycle - beta) * u2.cycles_per_bit
    with np.errstate(over="ignore"):
        off = c * (group.a1 * math.expm1(min(LN2 * (d1 + d2) / c, 709.0)) + (group.a2 - group.a1) * math.expm1(min(LN2 * d2 / c, 709.0)))
    return off - k1 * d1 - k2 * d2


def _bounds(group: NomaGroup, T: float) -> tuple[float, float, float, float]:
    u1, u2 = group.users
    return min_offload_bits(u1, T), min_offload_bits(u2, T), u1.data_bits, u2.data_bits


def _boundary_pick(group, c, beta, T, free_index):
    """Box end for one coordinate when its closed form has no real value.

    The other coordinate sits at its box midpoint; the sign of the partial there picks
    the end, and the two ends are compared on the priced objective as a check.
    """
    D1, D2, R1, R2 = _bounds(group, T)
    lo, hi = (D1, R1) if free_index == 0 else (D2, R2)
    mid_other = 0.5 * (D2 + R2) if free_index == 0 else 0.5 * (D1 + R1)
    mid = 0.5 * (lo + hi)

    def energy(v):
        return _priced_group_energy(group, c, beta, v, mid_other) if free_index == 0 else _priced_group_energy(group, c, beta, mid_other, v)

    h = max(abs(hi - lo), 1.0) * 1e-6
    slope = energy(mid + h) - energy(mid - h)
    pick = lo if slope >= 0.0 else hi
    other = hi if pick == lo else lo
    return other if energy(other) < energy(pick) else pick


def d1_of_beta(group: NomaGroup, t: float, B: float, beta: float, T: float) -> float:
    """Strong user's offloaded bits from the stationarity closed form, clamped to its box."""
    if group.degenerate:
        raise ValueError("degenerate group: closed form divides by a2 - a1")
    if t <= 0.0:
        raise ValueError("d1_of_beta needs t > 0")
    u1, u2 = group.users
    c = B * t
    num = (group.a2 - group.a1) * (u1.energy_per_cycle * u1.cycles_per_bit - beta * u1.cycles_per_bit)
    den = group.a1 * (beta * (u1.cycles_per_bit - u2.cycles_per_bit) - u1.energy_per_cycle * u1.cycles_per_bit + u2.energy_per_cycle * u2.cycles_per_bit)
    D1, _, R1, _ = _bounds(group, T)
    if num <= 0.0:
        return D1
    if den <= 0.0:
        return _boundary_pick(group, c, beta, T, 0)
    return min(max(c * math.log2(num / den), D1), R1)


def d2_of_beta(group: NomaGroup, t: float, B: float, beta: float, T: float) -> float:
    """Weak user's offloaded bits from the stationarity closed form, clamped to its box."""
    if group.degenerate:
        raise ValueError("degenerate group: closed form divides by a2 - a1")
    if t <= 0.0:
        raise ValueError("d2_of_beta needs t > 0")
    u1, u2 = group.users
    arg = (beta * (u1.cycles_per_bit - u2.cycles_per_bit) - u1.energy_per_cycle * u1.cycles_per_bit + u2.energy_per_cycle * u2.cycles_per_bit) / (LN2 * (group.a2 - group.a1))
    _, D2, _, R2 = _bounds(group, T)
    if arg <= 0.0:
        return D2
    return min(max(B * t * math.log2(arg), D2), R2)


def group_optimal_data(instance: ProblemInstance, t: np.ndarray, beta: float, backend: str | None = None) -> np.ndarray:
    """Exact per-group minimizers of the priced data subproblem, shape (N, 2).

    Groups with zero time are held at their lower bounds.
    """
    arr = instance.arrays
    t = np.asarray(t, dtype=float)
    d = arr.D.copy()
    m = t > 0.0
    if np.any(m):
        k = (arr.P[m] - beta) * arr.C[m]
        d1, d2 = kernels.group_minimizer(
            arr.a1[m], arr.a2[m], k[:, 0].copy(), k[:, 1].copy(), instance.bandwidth * t[m],
            arr.D[m, 0].copy(), arr.D[m, 1].copy(), arr.R[m, 0].copy(), arr.R[m, 1].copy(), backend=backend,
        )
        d[m, 0] = d1
        d[m, 1] = d2
    return d


def cloud_load(instance: ProblemInstance, t: np.ndarray, beta: float, backend: str | None = None) -> float:
    """Cloud cycles consumed by the priced optimum at ``beta``."""
    d = group_optimal_data(instance, t, beta, backend=backend)
    return float(np.sum(d * instance.arrays.C))


def solve_data(instance: ProblemInstance, t: np.ndarray, backend: str | None = None) -> DataSolution:
    arr = instance.arrays
    t = np.asarray(t, dtype=float).reshape(-1)
    idle = t <= 0.0
    if np.any(arr.D[idle] > 0.0):
        gi = int(np.flatnonzero(idle & (arr.D.max(axis=1) > 0.0))[0])
        raise NoTimeForMandatoryData(f"group needs offload but has no time (group {gi})")
    d, beta, it = kernels.data_allocation(
        arr.a1, arr.a2, arr.C, arr.P, arr.D, arr.R, instance.bandwidth * t, instance.cloud_capacity, backend=backend
    )
    d = np.asarray(d)
    # bisection endpoints are box points, so their blend is too; snap rounding only
    d = np.minimum(np.maximum(d, arr.D), arr.R)
    return DataSolution(d, float(beta), int(it))
