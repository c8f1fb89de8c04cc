"""Comparison schemes and a brute-force oracle for small instances.

``equal_resource_solve`` fixes equal time shares and only optimizes the data split.
``oma_solve`` gives every user its own TDMA slice. ``grid_oracle`` searches a grid
over (t, d) with its own energy evaluation, then polishes the best grid point with
line searches; it shares no code with the alternating solver.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .data_alloc import solve_data
from .energy import EnergyReport, energy_report, total_objective
from .model import Allocation, ProblemInstance, UserProfile, validate_instance
from .solver import DEFAULT_MAX_ITER, DEFAULT_XI, SolveTrace, solve

MAX_ORACLE_GROUPS = 3
_LN2 = math.log(2.0)
_GOLD = (math.sqrt(5.0) - 1.0) / 2.0


class OracleRefused(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    best_objective: float
    best_point: Allocation
    grid_resolution: tuple[int, ...]
    resolution_bound: float


def equal_resource_solve(instance: ProblemInstance, backend: str | None = None) -> tuple[Allocation, EnergyReport]:
    validate_instance(instance).raise_if_failed()
    N = instance.n_groups
    t = np.full(N, instance.deadline / N)
    d = solve_data(instance, t, backend=backend).d
    alloc = Allocation(t, d)
    return alloc, energy_report(instance, alloc)


def oma_instance(instance: ProblemInstance) -> ProblemInstance:
    """Split every group into two single-user groups.

    The second slot of each new group is a silent placeholder: no data, and half the
    real user's channel gain so the strong/weak ordering still holds.
    """
    pairs = []
    for g in instance.groups:
        for u in g.users:
            ghost = UserProfile(0.0, u.cycles_per_bit, u.energy_per_cycle, u.local_capacity, 0.5 * u.channel_gain)
            pairs.append((u, ghost))
    return ProblemInstance.build(pairs, instance.bandwidth, instance.noise_psd, instance.deadline, instance.cloud_capacity)


def oma_solve(
    instance: ProblemInstance,
    xi: float = DEFAULT_XI,
    max_iter: int = DEFAULT_MAX_ITER,
    backend: str | None = None,
    kkt_tol: float | None = None,
) -> tuple[Allocation, EnergyReport, SolveTrace]:
    """Solve the TDMA variant. The allocation is indexed by user slice, shape (2N,) / (2N, 2)."""
    validate_instance(instance).raise_if_failed()
    return solve(oma_instance(instance), xi=xi, max_iter=max_iter, backend=backend, kkt_tol=kkt_tol)


# --------------------------------------------------------------------------- oracle


class _Energy:
    """Plain re-derivation of the objective: offload energy of each group plus local energy."""

    def __init__(self, instance: ProblemInstance):
        self.B = instance.bandwidth
        self.T = instance.deadline
        self.F = instance.cloud_capacity
        self.a1 = np.array([g.a1 for g in instance.groups])
        self.a2 = np.array([g.a2 for g in instance.groups])
        us = [g.users for g in instance.groups]
        self.R = np.array([[u.data_bits for u in p] for p in us], dtype=float)
        self.C = np.array([[u.cycles_per_bit for u in p] for p in us], dtype=float)
        self.P = np.array([[u.energy_per_cycle for u in p] for p in us], dtype=float)
        f = np.array([[u.local_capacity for u in p] for p in us], dtype=float)
        # bits beyond what the local CPU can finish before the deadline
        self.D = np.clip(self.R - f * self.T / self.C, 0.0, self.R)

    def group(self, i, t, d1, d2):
        """Energy of group i; broadcasts over t, d1, d2. Infinite where t = 0 but data > 0."""
        t, d1, d2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, d1, d2)))
        local = self.P[i, 0] * self.C[i, 0] * (self.R[i, 0] - d1) + self.P[i, 1] * self.C[i, 1] * (self.R[i, 1] - d2)
        c = self.B * t
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            r1 = np.minimum(np.where(c > 0, (d1 + d2) / c, np.where(d1 + d2 > 0, np.inf, 0.0)), 1100.0)
            r2 = np.minimum(np.where(c > 0, d2 / c, np.where(d2 > 0, np.inf, 0.0)), 1100.0)
            off = c * (self.a1[i] * np.expm1(_LN2 * r1) + (self.a2[i] - self.a1[i]) * np.expm1(_LN2 * r2))
        off = np.where((c <= 0) & (d1 + d2 <= 0), 0.0, off)
        off = np.where(np.isfinite(off), off, np.inf)
        return off + local

    def total(self, t, d):
        return math.fsum(float(self.group(i, t[i], d[i, 0], d[i, 1])) for i in range(t.shape[0]))

    def feasible(self, t, d):
        return (
            abs(t.sum() - self.T) <= 1e-12 * self.T
            and np.all(t >= 0)
            and np.all(d >= self.D - 1e-9)
            and np.all(d <= self.R + 1e-9)
            and float(np.sum(d * self.C)) <= self.F * (1 + 1e-12)
        )


def _pareto(load, energy):
    """Indices of the lower-left frontier, sorted by increasing load and decreasing energy."""
    order = np.lexsort((energy, load))
    e = energy[order]
    keep = e < np.minimum.accumulate(np.concatenate([[np.inf], e[:-1]]))
    return order[keep]


def _compositions(steps, n, allow_zero):
    for cut in itertools.combinations(range(steps + n - 1), n - 1):
        parts = [int(p) for p in np.diff(np.concatenate([[-1], cut, [steps + n - 1]])) - 1]
        if all(p > 0 or z for p, z in zip(parts, allow_zero)):
            yield parts


def _golden(f, lo, hi, iters=80):
    a, b = lo, hi
    x1 = b - _GOLD * (b - a)
    x2 = a + _GOLD * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if b - a <= 1e-15 * max(abs(a), abs(b), 1e-300):
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLD * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLD * (b - a)
            f2 = f(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def _polish(E: _Energy, t, d, sweeps=60):
    """Coordinate and pairwise line searches from a feasible point."""
    t, d = t.copy(), d.copy()
    N = t.shape[0]
    value = E.total(t, d)
    coords = [(i, j) for i in range(N) for j in range(2) if E.R[i, j] > E.D[i, j]]
    for _ in range(sweeps):
        start = value
        # single data coordinates, bounded by the box and the spare cloud capacity
        for i, j in coords:
            if t[i] <= 0:
                continue
            spare = E.F - float(np.sum(d * E.C))
            hi = min(E.R[i, j], d[i, j] + max(spare, 0.0) / E.C[i, j])
            lo = E.D[i, j]
            if hi <= lo:
                continue

            def f(v, i=i, j=j):
                dd = d[i].copy()
                dd[j] = v
                return float(E.group(i, t[i], dd[0], dd[1]))

            v, fv = _golden(f, lo, hi)
            old = float(E.group(i, t[i], d[i, 0], d[i, 1]))
            if fv < old:
                d[i, j] = v
        # load-neutral exchange between two data coordinates
        for (i, j), (k, m) in itertools.combinations(coords, 2):
            if t[i] <= 0 or t[k] <= 0:
                continue
            ratio = E.C[i, j] / E.C[k, m]
            lo = max(E.D[i, j] - d[i, j], (d[k, m] - E.R[k, m]) / ratio)
            hi = min(E.R[i, j] - d[i, j], (d[k, m] - E.D[k, m]) / ratio)
            if hi <= lo:
                continue
            base = d.copy()

            def f(s, i=i, j=j, k=k, m=m):
                dd = base.copy()
                dd[i, j] += s
                dd[k, m] -= s * ratio
                return E.total(t, dd)

            s, fs = _golden(f, lo, hi)
            if fs < E.total(t, d):
                d[i, j] += s
                d[k, m] -= s * ratio
        # time exchange between two groups
        for i, k in itertools.combinations(range(N), 2):
            base = t.copy()

            def f(s, i=i, k=k):
                tt = base.copy()
                tt[i] += s
                tt[k] -= s
                return float(E.group(i, tt[i], d[i, 0], d[i, 1]) + E.group(k, tt[k], d[k, 0], d[k, 1]))

            s, fs = _golden(f, -t[i], t[k])
            if fs < f(0.0):
                t[i] += s
                t[k] -= s
        t *= E.T / t.sum()
        value = E.total(t, d)
        if not value < start * (1 - 1e-15):
            break
    return t, d


def _curvature_bound(E: _Energy, t, d, h_t, h_d):
    """Half the summed second differences times squared grid spacing, per search direction."""
    base = E.total(t, d)
    acc = 0.0
    N = t.shape[0]
    for i in range(N):
        for j in range(2):
            h = h_d[i, j]
            if h <= 0 or t[i] <= 0:
                continue
            up, dn = d.copy(), d.copy()
            up[i, j] = min(d[i, j] + h, E.R[i, j])
            dn[i, j] = max(d[i, j] - h, E.D[i, j])
            if up[i, j] - dn[i, j] <= 0:
                continue
            # one-sided second difference if pinned to a box end
            hp, hm = up[i, j] - d[i, j], d[i, j] - dn[i, j]
            if hp > 0 and hm > 0:
                curv = 2 * ((E.total(t, up) - base) / hp + (E.total(t, dn) - base) / hm) / (hp + hm)
            else:
                step = hp if hp > 0 else -hm
                far = d.copy()
                far[i, j] = d[i, j] + 2 * step
                far[i, j] = min(max(far[i, j], E.D[i, j]), E.R[i, j])
                near = up if hp > 0 else dn
                curv = (E.total(t, far) - 2 * E.total(t, near) + base) / step**2
            acc += 0.5 * max(curv, 0.0) * h * h
    for i, k in itertools.combinations(range(N), 2):
        h = min(h_t, t[i], t[k])
        if h <= 0:
            continue
        up, dn = t.copy(), t.copy()
        up[i] += h
        up[k] -= h
        dn[i] -= h
        dn[k] += h
        curv = (E.total(up, d) - 2 * base + E.total(dn, d)) / h**2
        acc += 0.5 * max(curv, 0.0) * h * h
    return acc


def grid_oracle(instance: ProblemInstance, steps_per_dim: int = 64, polish: bool = True) -> OracleResult:
    """Exhaustive search over a grid of time shares and offloaded bits.

    For every time level each group's grid points are reduced to their (cloud load,
    energy) frontier, so the groups can be combined under the capacity limit without
    enumerating the full product grid. The bound is an estimate of how far the best
    grid point can sit above the true optimum.
    """
    N = instance.n_groups
    if N > MAX_ORACLE_GROUPS:
        raise OracleRefused(f"grid oracle handles at most {MAX_ORACLE_GROUPS} groups, got {N}")
    if steps_per_dim < 8:
        raise ValueError("steps_per_dim must be >= 8")
    validate_instance(instance).raise_if_failed()
    E = _Energy(instance)
    S = steps_per_dim
    T = E.T
    frac = np.linspace(0.0, 1.0, S + 1)
    grids = [[E.D[i, j] + frac * (E.R[i, j] - E.D[i, j]) for j in range(2)] for i in range(N)]

    # frontier[i][k] for time level k (t = k*T/S)
    frontier = []
    for i in range(N):
        g1, g2 = np.meshgrid(grids[i][0], grids[i][1], indexing="ij")
        g1, g2 = g1.ravel(), g2.ravel()
        load = g1 * E.C[i, 0] + g2 * E.C[i, 1]
        levels = []
        for k in range(S + 1):
            en = E.group(i, k * T / S, g1, g2)
            ok = np.isfinite(en)
            idx = np.flatnonzero(ok)
            if idx.size == 0:
                levels.append(None)
                continue
            keep = idx[_pareto(load[idx], en[idx])]
            levels.append((load[keep], en[keep], g1[keep], g2[keep]))
        frontier.append(levels)

    allow_zero = [E.D[i].sum() <= 0 for i in range(N)]
    best = (math.inf, None)
    for parts in _compositions(S, N, allow_zero):
        fronts = [frontier[i][k] for i, k in enumerate(parts)]
        if any(f is None for f in fronts):
            continue
        # combine all but the last group by brute force, then pick the last by capacity
        head_load = np.zeros(1)
        head_en = np.zeros(1)
        head_idx = np.zeros((1, 0), dtype=int)
        for f in fronts[:-1]:
            hl = (head_load[:, None] + f[0][None, :]).ravel()
            he = (head_en[:, None] + f[1][None, :]).ravel()
            hi = np.concatenate(
                [np.repeat(head_idx, f[0].size, axis=0), np.tile(np.arange(f[0].size), head_idx.shape[0])[:, None]], axis=1
            )
            keep = _pareto(hl, he)
            head_load, head_en, head_idx = hl[keep], he[keep], hi[keep]
        last = fronts[-1]
        room = E.F - head_load
        pos = np.searchsorted(last[0], room, side="right") - 1
        ok = pos >= 0
        if not np.any(ok):
            continue
        tot = np.where(ok, head_en + last[1][np.maximum(pos, 0)], np.inf)
        j = int(np.argmin(tot))
        if tot[j] < best[0]:
            picks = list(head_idx[j]) + [int(pos[j])]
            d = np.array([[fronts[i][2][p], fronts[i][3][p]] for i, p in enumerate(picks)])
            best = (float(tot[j]), (np.asarray(parts) * T / S, d))
    if best[1] is None:
        raise ValueError("grid oracle found no feasible grid point")

    t, d = best[1]
    h_t = T / S
    h_d = (E.R - E.D) / S
    bound = _curvature_bound(E, t, d, h_t, h_d)
    if polish:
        t2, d2 = _polish(E, t, d)
        if E.feasible(t2, d2) and E.total(t2, d2) <= E.total(t, d):
            t, d = t2, d2
    point = Allocation(t, d)
    value = total_objective(instance, point)
    bound = max(bound, 1e-9 * abs(value))
    return OracleResult(value, point, (S,) * (3 * N), bound)
