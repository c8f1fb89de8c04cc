"""Random cell scenarios and JSON persistence of problem instances."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any

import numpy as np

from .model import ProblemInstance, UserProfile, min_offload_bits, validate_instance

FORMAT_TAG = "nomamec-instance"
FORMAT_VERSION = 1

_USER_FIELDS = {
    "data_bits": "data_bits",
    "cycles_per_bit": "cycles_per_bit",
    "energy_per_cycle": "energy_per_cycle",
    "local_capacity": "local_capacity",
    "channel_gain": "channel_gain",
}


class InstanceFormatError(ValueError):
    """Malformed instance file. ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class ScenarioError(ValueError):
    pass


class InfeasibleDrawError(ScenarioError):
    """No draw within ``max_attempts`` fits the cloud capacity."""

    def __init__(self, seed: int, attempts: int):
        self.seed = seed
        super().__init__(f"no feasible draw in {attempts} attempts (seed {seed})")


@dataclass(frozen=True)
class ScenarioSpec:
    n_users: int = 30
    cell_radius: float = 500.0
    min_distance: float = 10.0
    pathloss_intercept_db: float = 128.1
    pathloss_slope_db: float = 37.6
    shadowing_std_db: float = 4.0
    bandwidth: float = 1e7
    noise_psd_dbm_hz: float = -169.0
    r_range: tuple[float, float] = (1e5, 5e5)
    c_range: tuple[float, float] = (500.0, 1500.0)
    f_local: float = 1e9
    energy_per_cycle: float = 1e-10
    deadline: float = 0.1
    cloud_capacity: float = 6e9
    pairing: str = "sorted_extremes"
    seed: int = 0
    # redraw until the mandatory offload fits the cloud at the tightest (deadline, capacity)
    require_feasible: bool = True
    feasible_deadline: float | None = None
    feasible_capacity: float | None = None
    max_attempts: int = 1_000_000

    def validate(self) -> None:
        if self.n_users < 2 or self.n_users % 2:
            raise ScenarioError("n_users must be a positive even number")
        if not 0 < self.min_distance <= self.cell_radius:
            raise ScenarioError("need 0 < min_distance <= cell_radius")
        for name in ("r_range", "c_range"):
            lo, hi = getattr(self, name)
            if not (0 <= lo <= hi):
                raise ScenarioError(f"{name} must satisfy 0 <= low <= high")
        if self.c_range[0] <= 0:
            raise ScenarioError("c_range must be positive")
        if self.pairing not in ("sorted_extremes", "random"):
            raise ScenarioError(f"unknown pairing {self.pairing!r}")
        for name in ("bandwidth", "f_local", "deadline"):
            if not getattr(self, name) > 0:
                raise ScenarioError(f"{name} must be > 0")
        if self.shadowing_std_db < 0 or self.energy_per_cycle < 0 or self.cloud_capacity < 0:
            raise ScenarioError("negative shadowing, energy or capacity")
        if self.max_attempts < 1:
            raise ScenarioError("max_attempts must be >= 1")

    @property
    def noise_psd(self) -> float:
        return 10.0 ** ((self.noise_psd_dbm_hz - 30.0) / 10.0)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScenarioSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ScenarioError(f"unknown scenario fields: {sorted(unknown)}")
        kw = dict(data)
        for name in ("r_range", "c_range"):
            if name in kw:
                kw[name] = tuple(float(v) for v in kw[name])
        return replace(cls(), **kw)

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["r_range"] = list(self.r_range)
        out["c_range"] = list(self.c_range)
        return out


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def channel_gain_db(spec: ScenarioSpec, distance_m: float, shadow_db: float) -> float:
    return -(spec.pathloss_intercept_db + spec.pathloss_slope_db * math.log10(distance_m / 1000.0) + shadow_db)


def _draw_users(spec: ScenarioSpec, attempt: int) -> list[UserProfile]:
    users = []
    r2_min = (spec.min_distance / spec.cell_radius) ** 2
    for k in range(spec.n_users):
        rng = _stream(spec.seed, attempt, k)
        # uniform over the annulus min_distance..cell_radius
        dist = spec.cell_radius * math.sqrt(rng.uniform(r2_min, 1.0))
        shadow = rng.normal(0.0, spec.shadowing_std_db) if spec.shadowing_std_db > 0 else 0.0
        R = rng.uniform(*spec.r_range)
        C = rng.uniform(*spec.c_range)
        gain = 10.0 ** (channel_gain_db(spec, dist, shadow) / 10.0)
        users.append(UserProfile(float(R), float(C), spec.energy_per_cycle, spec.f_local, float(gain)))
    return users


def _pair(spec: ScenarioSpec, users: list[UserProfile], attempt: int) -> list[tuple[UserProfile, UserProfile]]:
    n = len(users)
    if spec.pairing == "sorted_extremes":
        # stable sort by decreasing gain; strongest k-th with weakest k-th
        order = sorted(range(n), key=lambda i: -users[i].channel_gain)
        pairs = [(users[order[k]], users[order[n - 1 - k]]) for k in range(n // 2)]
    else:
        perm = _stream(spec.seed, attempt, n).permutation(n)
        pairs = [(users[perm[2 * k]], users[perm[2 * k + 1]]) for k in range(n // 2)]
    return [(u, v) if u.channel_gain >= v.channel_gain else (v, u) for u, v in pairs]


def generate(spec: ScenarioSpec) -> ProblemInstance:
    """Deterministic instance for ``spec.seed``.

    With ``require_feasible`` the draw is repeated (fresh per-user streams per attempt)
    until the mandatory offload fits the cloud at the tightest deadline/capacity.
    """
    spec.validate()
    check_T = spec.feasible_deadline if spec.feasible_deadline is not None else spec.deadline
    check_F = spec.feasible_capacity if spec.feasible_capacity is not None else spec.cloud_capacity
    for attempt in range(spec.max_attempts):
        users = _draw_users(spec, attempt)
        if spec.require_feasible and sum(min_offload_bits(u, check_T) * u.cycles_per_bit for u in users) > check_F:
            continue
        pairs = _pair(spec, users, attempt)
        inst = ProblemInstance.build(pairs, spec.bandwidth, spec.noise_psd, spec.deadline, spec.cloud_capacity)
        if not spec.require_feasible:
            return inst
        probe = inst.with_changes(deadline=check_T, cloud_capacity=check_F)
        if probe.mandatory_load <= check_F and validate_instance(probe).ok:
            return inst
    raise InfeasibleDrawError(spec.seed, spec.max_attempts)


def instance_to_dict(instance: ProblemInstance) -> dict[str, Any]:
    def user(u: UserProfile) -> dict[str, float]:
        return {key: float(getattr(u, attr)) for key, attr in _USER_FIELDS.items()}

    return {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "bandwidth_hz": instance.bandwidth,
        "noise_psd_w_per_hz": instance.noise_psd,
        "deadline_s": instance.deadline,
        "cloud_capacity_cycles": instance.cloud_capacity,
        "groups": [{"user1": user(g.user1), "user2": user(g.user2)} for g in instance.groups],
    }


def dumps(instance: ProblemInstance) -> str:
    return json.dumps(instance_to_dict(instance), indent=2) + "\n"


def instance_hash(instance: ProblemInstance) -> str:
    return hashlib.sha256(dumps(instance).encode()).hexdigest()


def _number(obj: dict, key: str, path: str) -> float:
    if key not in obj:
        raise InstanceFormatError(f"{path}.{key}" if path else key, "missing field")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InstanceFormatError(f"{path}.{key}" if path else key, f"expected a number, got {type(v).__name__}")
    return float(v)


def instance_from_dict(data: Any) -> ProblemInstance:
    if not isinstance(data, dict):
        raise InstanceFormatError("$", "top level must be an object")
    if "format" in data and data["format"] != FORMAT_TAG:
        raise InstanceFormatError("format", f"expected {FORMAT_TAG!r}")
    if "version" in data and data["version"] != FORMAT_VERSION:
        raise InstanceFormatError("version", f"unsupported version {data['version']!r}")
    consts = {key: _number(data, key, "") for key in ("bandwidth_hz", "noise_psd_w_per_hz", "deadline_s", "cloud_capacity_cycles")}
    groups = data.get("groups")
    if groups is None:
        raise InstanceFormatError("groups", "missing field")
    if not isinstance(groups, list) or not groups:
        raise InstanceFormatError("groups", "expected a non-empty list")
    pairs = []
    for gi, g in enumerate(groups):
        if not isinstance(g, dict):
            raise InstanceFormatError(f"groups[{gi}]", "expected an object")
        pair = []
        for slot in ("user1", "user2"):
            path = f"groups[{gi}].{slot}"
            if slot not in g:
                raise InstanceFormatError(path, "missing field")
            u = g[slot]
            if not isinstance(u, dict):
                raise InstanceFormatError(path, "expected an object")
            pair.append(UserProfile(**{attr: _number(u, key, path) for key, attr in _USER_FIELDS.items()}))
        pairs.append(tuple(pair))
    return ProblemInstance.build(
        pairs, consts["bandwidth_hz"], consts["noise_psd_w_per_hz"], consts["deadline_s"], consts["cloud_capacity_cycles"]
    )


def loads(text: str) -> ProblemInstance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError("$", f"invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return instance_from_dict(data)


def save(instance: ProblemInstance, path: str | Path) -> None:
    Path(path).write_text(dumps(instance))


def load(path: str | Path) -> ProblemInstance:
    return loads(Path(path).read_text())
