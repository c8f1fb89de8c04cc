"""Alternating time/data minimization and KKT certification of its output."""

from __future__ import annotations

import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .data_alloc import solve_data
from .energy import LN2, EnergyReport, energy_report, g_prime, offload_gradient, total_objective
from .model import Allocation, ProblemInstance, validate_instance
from .time_alloc import solve_time

DEFAULT_XI = 1e-4
DEFAULT_MAX_ITER = 100
_ABS_FLOOR = 1e-15
_WAKE_TOL = 1e-9


@dataclass
class SolveTrace:
    initial_objective: float
    objective_per_iteration: list[float] = field(default_factory=list)
    half_step_objectives: list[float] = field(default_factory=list)
    alpha_per_iteration: list[float] = field(default_factory=list)
    beta_per_iteration: list[float] = field(default_factory=list)
    wake_ups: list[int] = field(default_factory=list)
    kkt_residual: float = math.nan
    termination: str = "max_iterations"
    wall_time: float = 0.0

    @property
    def iterations(self) -> int:
        return len(self.objective_per_iteration)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("iteration,objective_joules,alpha,beta\n")
        rows = zip(self.objective_per_iteration, self.alpha_per_iteration, self.beta_per_iteration)
        for i, (v, a, b) in enumerate(rows, start=1):
            buf.write(f"{i},{v:.9e},{a:.9e},{b:.9e}\n")
        return buf.getvalue()


def _objective(instance, t, d):
    return total_objective(instance, Allocation(t, d))


def _best_rate_value(instance: ProblemInstance, i: int, alpha: float, beta: float, backend=None) -> float:
    """Minimum over nonnegative rates of the group's priced energy per second, plus ``alpha``.

    Negative means the idle group would lower the Lagrangian by receiving time.
    """
    arr = instance.arrays
    B = instance.bandwidth
    k = (arr.P[i] - beta) * arr.C[i]
    upper = np.where(arr.R[i] > 0.0, 1e300, 0.0)
    u1, u2 = kernels.group_minimizer(
        arr.a1[i : i + 1], arr.a2[i : i + 1], k[:1].copy(), k[1:].copy(), np.array([B]),
        np.zeros(1), np.zeros(1), upper[:1].copy(), upper[1:].copy(), backend=backend,
    )
    u1, u2 = float(u1[0]), float(u2[0])
    a1, a2 = arr.a1[i], arr.a2[i]
    off = B * (a1 * math.expm1(LN2 * (u1 + u2) / B) + (a2 - a1) * math.expm1(LN2 * u2 / B))
    return off - k[0] * u1 - k[1] * u2 + alpha


def _idle_groups_wanting_time(instance, t, alpha, beta, backend=None) -> list[int]:
    arr = instance.arrays
    out = []
    for i in np.flatnonzero(t <= 0.0):
        if arr.R[i].sum() <= 0.0:
            continue
        if _best_rate_value(instance, int(i), alpha, beta, backend) < -_WAKE_TOL * arr.a2[i] * instance.bandwidth:
            out.append(int(i))
    return out


def _wake(instance, t, d, value, idle, backend=None):
    """Hand a shrinking slice of the frame to idle groups until the data step pays off."""
    T = instance.deadline
    busy = t > 0.0
    share = T / (busy.sum() + len(idle))
    for _ in range(60):
        trial = t * (1.0 - share / T)
        trial[idle] = share / len(idle)
        ds = solve_data(instance, trial, backend=backend)
        v = _objective(instance, trial, ds.d)
        if v < value:
            return trial, ds, v
        share *= 0.5
    return None


def solve(
    instance: ProblemInstance,
    xi: float = DEFAULT_XI,
    max_iter: int = DEFAULT_MAX_ITER,
    backend: str | None = None,
    kkt_tol: float | None = None,
    start: Allocation | None = None,
) -> tuple[Allocation, EnergyReport, SolveTrace]:
    """Minimize total user energy by alternating exact time and data updates.

    Starts from the mandatory offload and an equal time split, and stops once the
    relative objective change of a full round drops below ``xi`` (or after
    ``max_iter`` rounds). With ``kkt_tol`` set, a round only counts as converged once
    :func:`kkt_residual` is also below it; the objective flattens out long before the
    iterates stop moving, so the relative-change test alone can stop early.

    Idle groups (no data, no time) whose users would profit from offloading at the
    current prices are handed a slice of the frame. ``start`` replaces the default
    starting point; only its data part matters, since every round begins with a time step.
    """
    if not xi > 0:
        raise ValueError("xi must be > 0")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    validate_instance(instance).raise_if_failed()
    clock = time.perf_counter()

    N = instance.n_groups
    T = instance.deadline
    if start is None:
        d = instance.arrays.D.copy()
        t = np.full(N, T / N)
    else:
        if start.n_groups != N:
            raise ValueError(f"start has {start.n_groups} groups, instance has {N}")
        t, d = start.t.copy(), start.d.copy()
    value = _objective(instance, t, d)
    trace = SolveTrace(initial_objective=value, half_step_objectives=[value])
    alpha = beta = 0.0

    for it in range(1, max_iter + 1):
        ts = solve_time(instance, d, backend=backend)
        t = ts.t
        trace.half_step_objectives.append(_objective(instance, t, d))
        ds = solve_data(instance, t, backend=backend)
        d = ds.d
        new_value = _objective(instance, t, d)
        trace.half_step_objectives.append(new_value)
        alpha, beta = ts.alpha, ds.beta

        idle = _idle_groups_wanting_time(instance, t, alpha, beta, backend)
        if idle:
            woken = _wake(instance, t, d, new_value, idle, backend)
            if woken is not None:
                t, ds, new_value = woken
                d, beta = ds.d, ds.beta
                trace.half_step_objectives.append(new_value)
                trace.wake_ups.append(it)

        trace.objective_per_iteration.append(new_value)
        trace.alpha_per_iteration.append(alpha)
        trace.beta_per_iteration.append(beta)
        change = abs(new_value - value)
        converged = change < xi * value if value > 0.0 else change <= _ABS_FLOOR
        value = new_value
        if converged and trace.wake_ups and trace.wake_ups[-1] == it:
            converged = False
        if converged and kkt_tol is not None:
            converged = kkt_residual(instance, Allocation(t, d), alpha, beta, backend=backend) <= kkt_tol
        if converged:
            trace.termination = "converged"
            break

    alloc = Allocation(t, d)
    trace.kkt_residual = kkt_residual(instance, alloc, alpha, beta, backend=backend)
    trace.wall_time = time.perf_counter() - clock
    return alloc, energy_report(instance, alloc), trace


def kkt_residual(instance: ProblemInstance, alloc: Allocation, alpha: float, beta: float, backend: str | None = None) -> float:
    """Largest normalized violation of the optimality conditions of the full problem.

    Covers time stationarity (scaled by ``a2*B`` per group), data stationarity and
    bound signs (scaled by each user's local price ``(P + beta) * C``), complementary
    slackness of the frame and cloud budgets, and primal feasibility.
    """
    arr = instance.arrays
    B = instance.bandwidth
    T = instance.deadline
    F = instance.cloud_capacity
    t, d = alloc.t, alloc.d
    worst = 0.0

    total_t = float(t.sum())
    worst = max(worst, max(0.0, total_t - T) / T, float(np.max(np.maximum(0.0, -t))) / T)
    if alpha > 0.0:
        worst = max(worst, abs(total_t - T) / T)
    load = float(np.sum(d * arr.C))
    if F > 0.0:
        worst = max(worst, max(0.0, load - F) / F)
        if beta > 0.0:
            worst = max(worst, abs(load - F) / F)
    span = np.maximum(arr.R, 1.0)
    worst = max(worst, float(np.max(np.maximum(arr.D - d, 0.0) / span)), float(np.max(np.maximum(d - arr.R, 0.0) / span)))

    for i, g in enumerate(instance.groups):
        scale_t = g.a2 * B
        if t[i] > 0.0:
            if d[i].sum() > 0.0:
                worst = max(worst, abs(g_prime(g, d[i, 0], d[i, 1], B, t[i]) + alpha) / scale_t)
            else:
                worst = max(worst, max(0.0, -alpha) / scale_t)
        elif arr.R[i].sum() > 0.0:
            worst = max(worst, max(0.0, -_best_rate_value(instance, i, alpha, beta, backend)) / scale_t)

    grad = offload_gradient(instance, t, d, beta)
    scale_d = (arr.P + beta) * arr.C
    scale_d = np.where(scale_d > 0.0, scale_d, LN2 * arr.a2[:, None])
    for i in np.flatnonzero(t > 0.0):
        for j in range(2):
            lo, hi, v, g = arr.D[i, j], arr.R[i, j], d[i, j], grad[i, j]
            if lo == hi:
                continue
            if v <= lo:
                viol = max(0.0, -g)
            elif v >= hi:
                viol = max(0.0, g)
            else:
                viol = abs(g)
            worst = max(worst, viol / scale_d[i, j])
    return worst
