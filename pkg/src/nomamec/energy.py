"""Closed-form energies, NOMA powers and the time derivative of group offload energy.

All exponentials go through ``exp(ln2 * x)`` with ``x = bits / (B * t)``; spectral
efficiencies above ``MAX_EXPONENT`` bits/Hz are reported as :class:`PowerOverflowError`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Allocation, NomaGroup, ProblemInstance, UserProfile

LN2 = math.log(2.0)
MAX_EXPONENT = 700.0 / LN2


class PowerOverflowError(ArithmeticError):
    """Required transmit power is not representable (time share too small for the data)."""


class ZeroTimeError(ValueError):
    """Positive data was scheduled on a group with zero time."""


def _spectral_efficiency(bits: float, B: float, t: float) -> float:
    x = bits / (B * t)
    if x > MAX_EXPONENT:
        raise PowerOverflowError(f"power overflow: {x:.4g} bits/Hz requested")
    return x


def local_energy(user: UserProfile, d: float) -> float:
    assert 0.0 <= d <= user.data_bits, "offloaded bits outside [0, R]"
    return (user.data_bits - d) * user.cycles_per_bit * user.energy_per_cycle


def offload_powers(group: NomaGroup, d1: float, d2: float, t: float, B: float) -> tuple[float, float]:
    """Transmit powers (strong, weak) that deliver ``d1``, ``d2`` bits in ``t`` seconds under SIC."""
    if t <= 0.0:
        if d1 + d2 > 0.0:
            raise ZeroTimeError("zero time, positive data")
        return 0.0, 0.0
    xs = _spectral_efficiency(d1 + d2, B, t)
    x2 = _spectral_efficiency(d2, B, t)
    # 2^xs - 2^x2 = 2^x2 * (2^(xs - x2) - 1), exact when d1 = 0
    p1 = group.a1 * B * math.exp(LN2 * x2) * math.expm1(LN2 * (xs - x2))
    p2 = group.a2 * B * math.expm1(LN2 * x2)
    return p1, p2


def group_offload_energy(group: NomaGroup, d1: float, d2: float, t: float, B: float) -> float:
    if t <= 0.0:
        if d1 + d2 > 0.0:
            raise ZeroTimeError("zero time, positive data")
        return 0.0
    xs = _spectral_efficiency(d1 + d2, B, t)
    x2 = _spectral_efficiency(d2, B, t)
    return B * t * (group.a1 * math.expm1(LN2 * xs) + (group.a2 - group.a1) * math.expm1(LN2 * x2))


def _phi(z: float) -> float:
    # (1 - z) e^z - 1 without cancellation near z = 0
    if z < 0.25:
        term = z
        acc = 0.0
        for k in range(2, 24):
            term *= z / k
            acc += (k - 1) * term
        return -acc
    return (1.0 - z) * math.exp(z) - 1.0


def g_prime(group: NomaGroup, d1: float, d2: float, B: float, t: float) -> float:
    """Derivative of the group offload energy with respect to its time share."""
    if t <= 0.0:
        raise ValueError("g_prime needs t > 0")
    if d1 + d2 == 0.0:
        return 0.0
    xs = _spectral_efficiency(d1 + d2, B, t)
    x2 = _spectral_efficiency(d2, B, t)
    # a1*phi(xs) + (a2 - a1)*phi(x2) expands to the textbook form because a1 + (a2 - a1) = a2
    return B * (group.a1 * _phi(LN2 * xs) + (group.a2 - group.a1) * _phi(LN2 * x2))


@dataclass(frozen=True)
class EnergyReport:
    offload_energy: np.ndarray  # (N,)
    local_energy: np.ndarray  # (N, 2)
    powers: np.ndarray  # (N, 2)
    total: float


def offload_energy_array(instance: ProblemInstance, t: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Per-group offload energies for a whole allocation."""
    arr = instance.arrays
    B = instance.bandwidth
    t = np.asarray(t, dtype=float)
    d = np.asarray(d, dtype=float)
    s = d[:, 0] + d[:, 1]
    active = t > 0.0
    if np.any(~active & (s > 0.0)):
        raise ZeroTimeError("zero time, positive data")
    out = np.zeros_like(t)
    if not np.any(active):
        return out
    c = B * t[active]
    xs = s[active] / c
    x2 = d[active, 1] / c
    if np.any(xs > MAX_EXPONENT):
        raise PowerOverflowError("power overflow")
    a1 = arr.a1[active]
    a2 = arr.a2[active]
    out[active] = c * (a1 * np.expm1(LN2 * xs) + (a2 - a1) * np.expm1(LN2 * x2))
    return out


def local_energy_array(instance: ProblemInstance, d: np.ndarray) -> np.ndarray:
    arr = instance.arrays
    return (arr.R - np.asarray(d, dtype=float)) * arr.C * arr.P


def total_objective(instance: ProblemInstance, alloc: Allocation) -> float:
    """Total user energy: offloading plus local computing, in joules."""
    if alloc.n_groups != instance.n_groups:
        raise ValueError(f"allocation has {alloc.n_groups} groups, instance has {instance.n_groups}")
    off = offload_energy_array(instance, alloc.t, alloc.d)
    loc = local_energy_array(instance, alloc.d)
    return float(math.fsum(off) + math.fsum(loc.ravel()))


def energy_report(instance: ProblemInstance, alloc: Allocation) -> EnergyReport:
    off = offload_energy_array(instance, alloc.t, alloc.d)
    loc = local_energy_array(instance, alloc.d)
    B = instance.bandwidth
    powers = np.zeros((instance.n_groups, 2))
    for i, g in enumerate(instance.groups):
        powers[i] = offload_powers(g, alloc.d[i, 0], alloc.d[i, 1], alloc.t[i], B)
    return EnergyReport(off, loc, powers, float(math.fsum(off) + math.fsum(loc.ravel())))


def offload_gradient(instance: ProblemInstance, t: np.ndarray, d: np.ndarray, beta: float = 0.0) -> np.ndarray:
    """Partial derivatives of the objective plus ``beta`` times the cloud load, w.r.t. ``d``.

    Groups with ``t == 0`` get ``nan``; the expression is undefined there.
    """
    arr = instance.arrays
    B = instance.bandwidth
    t = np.asarray(t, dtype=float)
    d = np.asarray(d, dtype=float)
    grad = np.full((t.shape[0], 2), np.nan)
    m = t > 0.0
    c = B * t[m]
    es = np.exp(LN2 * (d[m, 0] + d[m, 1]) / c)
    e2 = np.exp(LN2 * d[m, 1] / c)
    a1 = arr.a1[m]
    a2 = arr.a2[m]
    grad[m, 0] = LN2 * a1 * es + (beta - arr.P[m, 0]) * arr.C[m, 0]
    grad[m, 1] = LN2 * a1 * es + LN2 * (a2 - a1) * e2 + (beta - arr.P[m, 1]) * arr.C[m, 1]
    return grad
