"""Convergence traces and energy sweeps over deadline or cloud capacity, as CSV text."""

from __future__ import annotations

import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .baselines import equal_resource_solve, oma_solve
from .model import InfeasibleInstanceError
from .scenario import ScenarioSpec, generate, instance_hash
from .solver import DEFAULT_MAX_ITER, DEFAULT_XI, solve

SCHEMES = ("proposed", "equal", "oma")
VARIABLES = ("deadline_T", "cloud_F")


class ExperimentError(RuntimeError):
    """A solve failed; ``seed`` identifies the scenario draw that triggered it."""

    def __init__(self, seed: int, cause: Exception):
        self.seed = seed
        self.cause = cause
        super().__init__(f"seed {seed}: {cause}")


def _fmt(x: float) -> str:
    return f"{x:.9e}"


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple[float, ...]
    n_instances: int = 100
    seed: int = 0
    schemes: tuple[str, ...] = SCHEMES
    scenario: ScenarioSpec = field(default_factory=lambda: ScenarioSpec(n_users=14))
    xi: float = DEFAULT_XI
    max_iter: int = DEFAULT_MAX_ITER
    workers: int = 1

    def validate(self) -> None:
        if self.variable not in VARIABLES:
            raise ValueError(f"variable must be one of {VARIABLES}")
        if not self.values or any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("values must be non-empty and strictly increasing")
        if self.n_instances < 1:
            raise ValueError("n_instances must be >= 1")
        if not self.schemes or any(s not in SCHEMES for s in self.schemes):
            raise ValueError(f"schemes must be a non-empty subset of {SCHEMES}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        self.scenario.validate()


def _scenario_for(spec: SweepSpec, k: int) -> ScenarioSpec:
    # every sweep point reuses the same draw, so it must be feasible at the tightest value
    tight = min(spec.values)
    sc = replace(spec.scenario, seed=spec.seed + k)
    if spec.variable == "deadline_T":
        return replace(sc, feasible_deadline=tight)
    return replace(sc, feasible_capacity=tight)


def _energy(scheme, inst, xi, max_iter):
    if scheme == "proposed":
        return solve(inst, xi=xi, max_iter=max_iter)[1].total
    if scheme == "equal":
        return equal_resource_solve(inst)[1].total
    return oma_solve(inst, xi=xi, max_iter=max_iter)[1].total


def _sweep_one(args):
    spec, k = args
    sc = _scenario_for(spec, k)
    try:
        base = generate(sc)
        rows = []
        for v in spec.values:
            inst = base.with_changes(deadline=v) if spec.variable == "deadline_T" else base.with_changes(cloud_capacity=v)
            h = instance_hash(inst)
            rows.append([(_energy(s, inst, spec.xi, spec.max_iter), h) for s in spec.schemes])
        return rows
    except (InfeasibleInstanceError, ArithmeticError, ValueError) as exc:
        raise ExperimentError(sc.seed, exc) from exc


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    # energies[k, v, s] for instance k, sweep value v, scheme s
    energies: np.ndarray
    hashes: tuple[tuple[tuple[str, ...], ...], ...]

    def mean(self) -> np.ndarray:
        return self.energies.mean(axis=0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("variable,value,scheme,mean_energy_j,n\n")
        means = self.mean()
        n = self.energies.shape[0]
        for vi, v in enumerate(self.spec.values):
            for si, s in enumerate(self.spec.schemes):
                buf.write(f"{self.spec.variable},{_fmt(v)},{s},{_fmt(means[vi, si])},{n}\n")
        return buf.getvalue()


def sweep(spec: SweepSpec) -> SweepResult:
    """Solve every (instance, value, scheme) cell. Rows come back in submission order."""
    spec.validate()
    jobs = [(spec, k) for k in range(spec.n_instances)]
    if spec.workers == 1:
        results = list(map(_sweep_one, jobs))
    else:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_sweep_one, jobs))
    energies = np.array([[[e for e, _ in cell] for cell in rows] for rows in results])
    hashes = tuple(tuple(tuple(h for _, h in cell) for cell in rows) for rows in results)
    for rows in hashes:
        for cell in rows:
            if len(set(cell)) != 1:
                raise AssertionError("schemes saw different instances at one sweep point")
    return SweepResult(spec, energies, hashes)


def run_sweep(spec: SweepSpec) -> str:
    return sweep(spec).to_csv()


def run_convergence(
    scenario: ScenarioSpec,
    F_values=(4e9, 6e9, 8e9),
    xi: float = DEFAULT_XI,
    max_iter: int = DEFAULT_MAX_ITER,
) -> str:
    """One objective trace per cloud capacity, all on the same draw."""
    F_values = tuple(float(f) for f in F_values)
    sc = replace(scenario, feasible_capacity=min(F_values))
    buf = io.StringIO()
    buf.write("F,iteration,objective_joules\n")
    try:
        base = generate(sc)
        for F in F_values:
            _, _, trace = solve(base.with_changes(cloud_capacity=F), xi=xi, max_iter=max_iter)
            for i, v in enumerate(trace.objective_per_iteration, start=1):
                buf.write(f"{_fmt(F)},{i},{_fmt(v)}\n")
    except (InfeasibleInstanceError, ArithmeticError, ValueError) as exc:
        raise ExperimentError(sc.seed, exc) from exc
    return buf.getvalue()
