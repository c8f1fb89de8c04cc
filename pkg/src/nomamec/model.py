"""Problem data model: users, NOMA groups, instances and allocations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class InfeasibleInstanceError(ValueError):
    """Raised when an instance violates an invariant or admits no feasible allocation."""

    def __init__(self, diagnostics: Sequence["Diagnostic"]):
        self.diagnostics = tuple(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class UserProfile:
    data_bits: float
    cycles_per_bit: float
    energy_per_cycle: float
    local_capacity: float
    channel_gain: float


@dataclass(frozen=True)
class NomaGroup:
    """Two users sharing a time share; ``user1`` is the strong (decoded first) user."""

    user1: UserProfile
    user2: UserProfile
    a1: float
    a2: float

    @classmethod
    def from_users(cls, user1: UserProfile, user2: UserProfile, noise_psd: float) -> "NomaGroup":
        return cls(user1, user2, noise_psd / user1.channel_gain, noise_psd / user2.channel_gain)

    @property
    def users(self) -> tuple[UserProfile, UserProfile]:
        return (self.user1, self.user2)

    @property
    def degenerate(self) -> bool:
        return self.a1 == self.a2


def min_offload_bits(user: UserProfile, deadline: float) -> float:
    """Bits that cannot be processed locally before ``deadline``."""
    if user.data_bits <= 0.0:
        return 0.0
    surplus = user.data_bits * user.cycles_per_bit - user.local_capacity * deadline
    if surplus <= 0.0:
        return 0.0
    return min(surplus / user.cycles_per_bit, user.data_bits)


@dataclass(frozen=True)
class InstanceArrays:
    """Column view of an instance used by the numeric kernels. Shapes (N,) or (N, 2)."""

    a1: np.ndarray
    a2: np.ndarray
    R: np.ndarray
    C: np.ndarray
    P: np.ndarray
    D: np.ndarray


@dataclass(frozen=True)
class ProblemInstance:
    groups: tuple[NomaGroup, ...]
    bandwidth: float
    noise_psd: float
    deadline: float
    cloud_capacity: float

    @classmethod
    def build(
        cls,
        pairs: Iterable[tuple[UserProfile, UserProfile]],
        bandwidth: float,
        noise_psd: float,
        deadline: float,
        cloud_capacity: float,
    ) -> "ProblemInstance":
        groups = tuple(NomaGroup.from_users(u1, u2, noise_psd) for u1, u2 in pairs)
        return cls(groups, float(bandwidth), float(noise_psd), float(deadline), float(cloud_capacity))

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    def with_changes(self, *, deadline: float | None = None, cloud_capacity: float | None = None) -> "ProblemInstance":
        return ProblemInstance(
            self.groups,
            self.bandwidth,
            self.noise_psd,
            self.deadline if deadline is None else float(deadline),
            self.cloud_capacity if cloud_capacity is None else float(cloud_capacity),
        )

    @cached_property
    def arrays(self) -> InstanceArrays:
        users = [g.users for g in self.groups]

        def col(attr: str) -> np.ndarray:
            return np.array([[getattr(u, attr) for u in pair] for pair in users], dtype=float).reshape(-1, 2)

        D = np.array(
            [[min_offload_bits(u, self.deadline) for u in pair] for pair in users], dtype=float
        ).reshape(-1, 2)
        return InstanceArrays(
            a1=np.array([g.a1 for g in self.groups], dtype=float),
            a2=np.array([g.a2 for g in self.groups], dtype=float),
            R=col("data_bits"),
            C=col("cycles_per_bit"),
            P=col("energy_per_cycle"),
            D=D,
        )

    @property
    def mandatory_load(self) -> float:
        arr = self.arrays
        return float(np.sum(arr.D * arr.C))


@dataclass(frozen=True)
class Allocation:
    """Time shares ``t`` (N,) in seconds and offloaded bits ``d`` (N, 2)."""

    t: np.ndarray
    d: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).reshape(-1)
        d = np.asarray(self.d, dtype=float).reshape(-1, 2)
        if t.shape[0] != d.shape[0]:
            raise ValueError(f"t has {t.shape[0]} groups but d has {d.shape[0]}")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "d", d)

    @property
    def n_groups(self) -> int:
        return self.t.shape[0]


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    group: int | None = None
    user: int | None = None
    severity: str = "error"

    def __str__(self) -> str:
        where = ""
        if self.group is not None:
            where = f", group {self.group}"
            if self.user is not None:
                where += f" user {self.user}"
        return f"{self.message}{where}"


@dataclass(frozen=True)
class ValidationReport:
    diagnostics: tuple[Diagnostic, ...]

    @property
    def ok(self) -> bool:
        return not self.errors

    @property
    def errors(self) -> tuple[Diagnostic, ...]:
        return tuple(d for d in self.diagnostics if d.severity == "error")

    @property
    def warnings(self) -> tuple[Diagnostic, ...]:
        return tuple(d for d in self.diagnostics if d.severity == "warning")

    def raise_if_failed(self) -> None:
        if not self.ok:
            raise InfeasibleInstanceError(self.errors)


def _check_user(user: UserProfile, gi: int, uj: int) -> list[Diagnostic]:
    out = []
    values = {
        "data_bits": user.data_bits,
        "cycles_per_bit": user.cycles_per_bit,
        "energy_per_cycle": user.energy_per_cycle,
        "local_capacity": user.local_capacity,
        "channel_gain": user.channel_gain,
    }
    for name, v in values.items():
        if not math.isfinite(v):
            out.append(Diagnostic("non_finite", f"{name} is not finite", gi, uj))
    if user.data_bits < 0:
        out.append(Diagnostic("negative_data", "data_bits must be >= 0", gi, uj))
    if not user.cycles_per_bit > 0:
        out.append(Diagnostic("bad_cycles", "cycles_per_bit must be > 0", gi, uj))
    if user.energy_per_cycle < 0:
        out.append(Diagnostic("negative_energy", "energy_per_cycle must be >= 0", gi, uj))
    if not user.local_capacity > 0:
        out.append(Diagnostic("bad_local_capacity", "local_capacity must be > 0", gi, uj))
    if not user.channel_gain > 0:
        out.append(Diagnostic("bad_gain", "channel_gain must be > 0", gi, uj))
    return out


def validate_instance(instance: ProblemInstance) -> ValidationReport:
    """Check every model invariant plus global feasibility of the cloud budget.

    Degenerate groups (equal gains) are reported as warnings; everything else is an error.
    """
    diags: list[Diagnostic] = []
    for name in ("bandwidth", "noise_psd", "deadline"):
        v = getattr(instance, name)
        if not (math.isfinite(v) and v > 0):
            diags.append(Diagnostic("bad_constant", f"{name} must be finite and > 0"))
    if not (math.isfinite(instance.cloud_capacity) and instance.cloud_capacity >= 0):
        diags.append(Diagnostic("bad_constant", "cloud_capacity must be finite and >= 0"))
    if instance.n_groups < 1:
        diags.append(Diagnostic("no_groups", "instance needs at least one group"))
    if diags:
        return ValidationReport(tuple(diags))

    user_ok = True
    for gi, g in enumerate(instance.groups):
        for uj, u in enumerate(g.users, start=1):
            found = _check_user(u, gi, uj)
            user_ok &= not found
            diags.extend(found)
        if g.user1.channel_gain > 0 and g.user2.channel_gain > 0:
            if g.user1.channel_gain < g.user2.channel_gain:
                diags.append(Diagnostic("ordering", "ordering violated", gi))
            elif g.user1.channel_gain == g.user2.channel_gain:
                diags.append(Diagnostic("degenerate", "degenerate group (equal channel gains)", gi, severity="warning"))
            for uj, (a, u) in enumerate(((g.a1, g.user1), (g.a2, g.user2)), start=1):
                if a != instance.noise_psd / u.channel_gain:
                    diags.append(Diagnostic("stale_coefficient", "noise-over-gain coefficient does not match", gi, uj))
    if not user_ok:
        return ValidationReport(tuple(diags))

    if instance.mandatory_load > instance.cloud_capacity:
        diags.append(Diagnostic("infeasible", "infeasible: mandatory offload exceeds cloud capacity"))
    return ValidationReport(tuple(diags))
