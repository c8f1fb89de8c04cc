import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nomamec.model import ProblemInstance, UserProfile
from nomamec.scenario import ScenarioSpec, generate

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def user(R=1e5, C=1000.0, P=1e-10, f=1e9, h=1e-10):
    return UserProfile(float(R), float(C), float(P), float(f), float(h))


def unit_group_instance(T=10.0, F=1e9, R=(10.0, 10.0)):
    """One group with a1 = 1, a2 = 2, B = 1 and no mandatory offload."""
    u1 = UserProfile(R[0], 1.0, 1.0, 1e9, 1.0)
    u2 = UserProfile(R[1], 1.0, 2.0, 1e9, 0.5)
    return ProblemInstance.build([(u1, u2)], 1.0, 1.0, T, F)


def small_instance(seed, n_users=4, F=6e9, **kw):
    return generate(ScenarioSpec(seed=seed, n_users=n_users, cloud_capacity=F, **kw))


@pytest.fixture
def desk2():
    """Two asymmetric groups at realistic scale."""
    return small_instance(11, n_users=4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
