"""Command-line entry point.

    nomamec converge [--scenario spec.json] [--F 4e9 6e9 8e9]
    nomamec sweep {deadline_T,cloud_F} [--values ...] [--instances 100]
    nomamec solve instance.json [--trace-out trace.csv]
    nomamec oracle instance.json [--steps 64]
    nomamec generate [--scenario spec.json] --out instance.json

Exit codes: 0 ok, 2 bad configuration or input file, 3 infeasible instance.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .baselines import OracleRefused, grid_oracle
from .experiments import SCHEMES, ExperimentError, SweepSpec, run_convergence, run_sweep
from .model import InfeasibleInstanceError
from .scenario import InfeasibleDrawError, InstanceFormatError, ScenarioError, ScenarioSpec, dumps, generate, load
from .solver import DEFAULT_MAX_ITER, DEFAULT_XI, solve

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3

DEFAULT_SWEEPS = {
    "deadline_T": (0.05, 0.075, 0.1, 0.125, 0.15),
    "cloud_F": tuple(k * 1e9 for k in range(2, 11)),
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="scenario seed (overrides the scenario file)")
    p.add_argument("--xi", type=float, default=DEFAULT_XI, help="relative objective change to stop at")
    p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    p.add_argument("--out", type=Path, default=None, help="write the result here instead of stdout")
    p.add_argument("--scenario", type=Path, default=None, help="JSON file with scenario fields")


def build_parser() -> argparse.ArgumentParser:
    # argparse exits with 2 on usage errors, which matches the config exit code
    ap = argparse.ArgumentParser(prog="nomamec", description="Energy-minimal offloading for uplink NOMA edge computing.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("converge", help="objective per iteration for several cloud capacities")
    _common(p)
    p.add_argument("--F", type=float, nargs="+", default=[4e9, 6e9, 8e9], dest="F_values")

    p = sub.add_parser("sweep", help="mean energy per scheme along deadline or cloud capacity")
    _common(p)
    p.add_argument("variable", choices=sorted(DEFAULT_SWEEPS))
    p.add_argument("--values", type=float, nargs="+", default=None)
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--schemes", nargs="+", choices=SCHEMES, default=list(SCHEMES))
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("solve", help="solve one instance file")
    _common(p)
    p.add_argument("instance", type=Path)
    p.add_argument("--trace-out", type=Path, default=None, help="per-iteration CSV")
    p.add_argument("--kkt-tol", type=float, default=None, help="also require this KKT residual before stopping")

    p = sub.add_parser("oracle", help="grid search on a small instance file (at most 3 groups)")
    _common(p)
    p.add_argument("instance", type=Path)
    p.add_argument("--steps", type=int, default=64)

    p = sub.add_parser("generate", help="draw an instance and write it as JSON")
    _common(p)
    return ap


def _scenario(args, **defaults) -> ScenarioSpec:
    fields = dict(defaults)
    if args.scenario is not None:
        try:
            data = json.loads(args.scenario.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ScenarioError(f"cannot read scenario file: {exc}") from None
        if not isinstance(data, dict):
            raise ScenarioError("scenario file must hold a JSON object")
        fields.update(data)
    if args.seed is not None:
        fields["seed"] = args.seed
    spec = ScenarioSpec.from_dict(fields)
    spec.validate()
    return spec


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _solve_cmd(args) -> int:
    inst = load(args.instance)
    alloc, report, trace = solve(inst, xi=args.xi, max_iter=args.max_iter, kkt_tol=args.kkt_tol)
    if args.trace_out is not None:
        args.trace_out.write_text(trace.to_csv())
    lines = ["group,t_s,d1_bits,d2_bits,p1_w,p2_w"]
    for i in range(inst.n_groups):
        p1, p2 = report.powers[i]
        lines.append(f"{i},{alloc.t[i]:.9e},{alloc.d[i, 0]:.9e},{alloc.d[i, 1]:.9e},{p1:.9e},{p2:.9e}")
    _emit("\n".join(lines) + "\n", args.out)
    print(
        f"total {report.total:.9e} J  offload {report.offload_energy.sum():.9e} J  local {report.local_energy.sum():.9e} J  "
        f"iterations {trace.iterations} ({trace.termination})  kkt {trace.kkt_residual:.2e}",
        file=sys.stderr,
    )
    return EXIT_OK


def _oracle_cmd(args) -> int:
    inst = load(args.instance)
    res = grid_oracle(inst, args.steps)
    _, report, _ = solve(inst, xi=args.xi, max_iter=args.max_iter)
    text = (
        "oracle_best_j,resolution_bound_j,solver_j,difference_j\n"
        f"{res.best_objective:.9e},{res.resolution_bound:.9e},{report.total:.9e},{report.total - res.best_objective:.9e}\n"
    )
    _emit(text, args.out)
    return EXIT_OK


def _is_infeasible(exc: Exception) -> bool:
    if isinstance(exc, InfeasibleDrawError):
        return True
    return isinstance(exc, InfeasibleInstanceError) and any(d.code == "infeasible" for d in exc.diagnostics)


def _report(exc: Exception, seed: int | None) -> int:
    where = f" (seed {seed})" if seed is not None else ""
    if _is_infeasible(exc):
        print(f"infeasible instance{where}: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    print(f"invalid configuration{where}: {exc}", file=sys.stderr)
    return EXIT_CONFIG


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "converge":
            _emit(run_convergence(_scenario(args), args.F_values, xi=args.xi, max_iter=args.max_iter), args.out)
        elif args.command == "sweep":
            values = tuple(args.values) if args.values else DEFAULT_SWEEPS[args.variable]
            scenario = _scenario(args, n_users=14)
            spec = SweepSpec(
                args.variable, values, n_instances=args.instances, seed=scenario.seed,
                schemes=tuple(args.schemes), scenario=scenario,
                xi=args.xi, max_iter=args.max_iter, workers=args.workers,
            )
            _emit(run_sweep(spec), args.out)
        elif args.command == "solve":
            return _solve_cmd(args)
        elif args.command == "oracle":
            return _oracle_cmd(args)
        else:
            _emit(dumps(generate(_scenario(args))), args.out)
    except ExperimentError as exc:
        return _report(exc.cause, exc.seed)
    except (InfeasibleInstanceError, ScenarioError, InstanceFormatError, OracleRefused, OSError, ValueError) as exc:
        return _report(exc, args.seed)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
