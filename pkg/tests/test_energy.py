import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nomamec.energy import (
    LN2,
    PowerOverflowError,
    ZeroTimeError,
    g_prime,
    group_offload_energy,
    local_energy,
    offload_gradient,
    offload_powers,
    total_objective,
)
from nomamec.model import Allocation, NomaGroup

from conftest import small_instance, user

UNIT = NomaGroup(user(h=1.0), user(h=0.5), 1.0, 2.0)


def realistic_group(a1, ratio):
    return NomaGroup(user(h=1.0), user(h=1.0 / ratio), a1, a1 * ratio)


# realistic scale: a = noise / gain around 1e-14 .. 1e-9, B = 1e7, t in ms
a1s = st.floats(1e-14, 1e-9)
ratios = st.floats(1.0, 1e4)
bits = st.floats(0.0, 5e5)
times = st.floats(1e-4, 0.1)
B = 1e7


def test_local_energy_examples():
    u = user(R=5e5, C=1000, P=1e-10)
    assert local_energy(u, 0.0) == pytest.approx(0.05, rel=1e-15)
    assert local_energy(u, 5e5) == 0.0
    assert local_energy(u, 2.5e5) == pytest.approx(0.025, rel=1e-15)


def test_local_energy_precondition():
    with pytest.raises(AssertionError):
        local_energy(user(R=10.0), 11.0)


def test_unit_powers():
    assert offload_powers(UNIT, 1.0, 1.0, 1.0, 1.0) == pytest.approx((2.0, 2.0), rel=1e-15)


def test_unit_energy_and_longer_time():
    assert group_offload_energy(UNIT, 1.0, 1.0, 1.0, 1.0) == pytest.approx(4.0, rel=1e-15)
    e2 = group_offload_energy(UNIT, 1.0, 1.0, 2.0, 1.0)
    assert e2 == pytest.approx(2.0 * (1.0 + math.sqrt(2.0) - 1.0), rel=1e-15)
    assert e2 == pytest.approx(2.828, abs=5e-4)
    assert e2 < 4.0


def test_silent_group():
    assert offload_powers(UNIT, 0.0, 0.0, 1.0, 1.0) == (0.0, 0.0)
    assert group_offload_energy(UNIT, 0.0, 0.0, 3.0, 1.0) == 0.0
    assert offload_powers(UNIT, 0.0, 0.0, 0.0, 1.0) == (0.0, 0.0)
    assert group_offload_energy(UNIT, 0.0, 0.0, 0.0, 1.0) == 0.0


def test_weak_user_silent_gives_single_user_power():
    p1, p2 = offload_powers(UNIT, 3.0, 0.0, 2.0, 1.0)
    assert p2 == 0.0
    assert p1 == pytest.approx(1.0 * (2 ** 1.5 - 1), rel=1e-15)


def test_zero_time_with_data_rejected():
    with pytest.raises(ZeroTimeError, match="zero time, positive data"):
        offload_powers(UNIT, 1.0, 0.0, 0.0, 1.0)
    with pytest.raises(ZeroTimeError):
        group_offload_energy(UNIT, 0.0, 1.0, 0.0, 1.0)


def test_overflow_is_reported():
    with pytest.raises(PowerOverflowError):
        group_offload_energy(UNIT, 2000.0, 0.0, 1.0, 1.0)


def test_g_prime_examples():
    assert g_prime(UNIT, 0.0, 0.0, 1.0, 5.0) == 0.0
    assert g_prime(UNIT, 1.0, 1.0, 1.0, 1e-3 * 30) < g_prime(UNIT, 1.0, 1.0, 1.0, 1.0) < 0.0
    assert g_prime(UNIT, 1.0, 1.0, 1.0, 0.01) < g_prime(UNIT, 1.0, 1.0, 1.0, 0.03)
    with pytest.raises(ValueError):
        g_prime(UNIT, 1.0, 1.0, 1.0, 0.0)


def test_g_prime_matches_textbook_form():
    d1, d2, b, t = 0.7, 1.3, 2.0, 0.9
    xs, x2 = (d1 + d2) / (b * t), d2 / (b * t)
    ref = 1.0 * (b - LN2 * (d1 + d2) / t) * 2**xs + 1.0 * (b - LN2 * d2 / t) * 2**x2 - 2.0 * b
    assert g_prime(UNIT, d1, d2, b, t) == pytest.approx(ref, rel=1e-12)


@given(a1s, ratios, bits, bits, times)
def test_energy_equals_time_times_powers(a1, ratio, d1, d2, t):
    g = realistic_group(a1, ratio)
    p1, p2 = offload_powers(g, d1, d2, t, B)
    e = group_offload_energy(g, d1, d2, t, B)
    assert e == pytest.approx(t * (p1 + p2), rel=1e-12, abs=1e-300)


@given(a1s, ratios, bits, bits, times, st.floats(0.1, 10.0))
def test_perspective_scaling(a1, ratio, d1, d2, t, k):
    # g(k t, k d) = k g(t, d)
    g = realistic_group(a1, ratio)
    assert group_offload_energy(g, k * d1, k * d2, k * t, B) == pytest.approx(
        k * group_offload_energy(g, d1, d2, t, B), rel=1e-11, abs=1e-300
    )


@given(a1s, ratios, st.floats(1e3, 5e5), bits, times)
def test_g_prime_central_difference(a1, ratio, d1, d2, t):
    g = realistic_group(a1, ratio)
    h = 1e-6 * t
    fd = (group_offload_energy(g, d1, d2, t + h, B) - group_offload_energy(g, d1, d2, t - h, B)) / (2 * h)
    assert g_prime(g, d1, d2, B, t) == pytest.approx(fd, rel=1e-6)


@given(a1s, ratios, bits, bits, times, times)
def test_energy_decreases_in_time(a1, ratio, d1, d2, t, u):
    g = realistic_group(a1, ratio)
    lo, hi = sorted((t, u))
    assert group_offload_energy(g, d1, d2, hi, B) <= group_offload_energy(g, d1, d2, lo, B) * (1 + 1e-14)


@given(a1s, ratios, *(st.tuples(bits, bits, times) for _ in range(2)))
def test_midpoint_convexity(a1, ratio, p, q):
    g = realistic_group(a1, ratio)
    mid = [(x + y) / 2 for x, y in zip(p, q)]
    f = lambda v: group_offload_energy(g, v[0], v[1], v[2], B)
    assert f(mid) <= (f(p) + f(q)) / 2 + 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_gradient_against_finite_differences(seed):
    inst = small_instance(seed, n_users=6)
    rng = np.random.default_rng(seed)
    arr = inst.arrays
    t = inst.deadline * (0.5 + rng.uniform(size=inst.n_groups)) / inst.n_groups
    d = arr.D + rng.uniform(0.1, 0.9, arr.D.shape) * (arr.R - arr.D)
    beta = 3e-11
    grad = offload_gradient(inst, t, d, beta)
    for i in range(inst.n_groups):
        for j in range(2):
            h = 1e-4 * (arr.R[i, j] - arr.D[i, j])
            up, dn = d.copy(), d.copy()
            up[i, j] += h
            dn[i, j] -= h
            f = lambda x: total_objective(inst, Allocation(t, x)) + beta * float(np.sum(x * arr.C))
            fd = (f(up) - f(dn)) / (2 * h)
            # compare on the scale of the local price per bit
            assert abs(grad[i, j] - fd) <= 1e-6 * arr.C[i, j] * arr.P[i, j]


def test_total_objective_pure_local():
    inst = small_instance(3, n_users=6, deadline=10.0)
    arr = inst.arrays
    assert np.all(arr.D == 0)
    t = np.full(inst.n_groups, inst.deadline / inst.n_groups)
    expected = math.fsum((arr.R * arr.C * arr.P).ravel())
    assert total_objective(inst, Allocation(t, np.zeros_like(arr.R))) == expected


def test_total_objective_full_offload_is_offload_only():
    inst = small_instance(4, n_users=4, deadline=50.0, F=1e12)
    arr = inst.arrays
    t = np.full(inst.n_groups, inst.deadline / inst.n_groups)
    total = total_objective(inst, Allocation(t, arr.R))
    parts = [group_offload_energy(g, *arr.R[i], t[i], inst.bandwidth) for i, g in enumerate(inst.groups)]
    assert total == pytest.approx(math.fsum(parts), rel=1e-14)
