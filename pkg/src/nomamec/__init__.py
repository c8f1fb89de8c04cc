"""Time and offloading allocation that minimizes user energy in uplink NOMA edge computing."""

from .baselines import OracleResult, equal_resource_solve, grid_oracle, oma_instance, oma_solve
from .energy import EnergyReport, energy_report, g_prime, group_offload_energy, local_energy, offload_powers, total_objective
from .model import (
    Allocation,
    InfeasibleInstanceError,
    NomaGroup,
    ProblemInstance,
    UserProfile,
    ValidationReport,
    min_offload_bits,
    validate_instance,
)
from .scenario import ScenarioSpec, generate
from .solver import SolveTrace, kkt_residual, solve

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "EnergyReport",
    "InfeasibleInstanceError",
    "NomaGroup",
    "OracleResult",
    "ProblemInstance",
    "ScenarioSpec",
    "SolveTrace",
    "UserProfile",
    "ValidationReport",
    "energy_report",
    "equal_resource_solve",
    "g_prime",
    "generate",
    "grid_oracle",
    "group_offload_energy",
    "kkt_residual",
    "local_energy",
    "min_offload_bits",
    "offload_powers",
    "oma_instance",
    "oma_solve",
    "solve",
    "total_objective",
    "validate_instance",
]
