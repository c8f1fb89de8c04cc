import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nomamec.energy import PowerOverflowError, g_prime
from nomamec.model import NomaGroup, ProblemInstance
from nomamec.time_alloc import invert_g_prime, solve_time, time_budget

from conftest import small_instance, user

UNIT = NomaGroup(user(h=1.0), user(h=0.5), 1.0, 2.0)
REAL = NomaGroup(user(h=3e-11), user(h=2e-12), 4e-21 / 3e-11, 4e-21 / 2e-12)


def test_unit_fixed_point():
    assert invert_g_prime(UNIT, 1.0, 1.0, 1.0, g_prime(UNIT, 1.0, 1.0, 1.0, 1.0)) == pytest.approx(1.0, rel=1e-12)


def test_round_trip_realistic():
    target = g_prime(REAL, 2e5, 1e5, 1e7, 0.03)
    assert invert_g_prime(REAL, 2e5, 1e5, 1e7, target) == pytest.approx(0.03, rel=1e-9)


@given(st.floats(1e-4, 0.1), st.floats(1e3, 5e5), st.floats(0.0, 5e5))
def test_round_trip_property(t0, d1, d2):
    target = g_prime(REAL, d1, d2, 1e7, t0)
    if target < 0.0:
        assert invert_g_prime(REAL, d1, d2, 1e7, target) == pytest.approx(t0, rel=1e-9)


def test_inverse_is_increasing():
    t1 = invert_g_prime(REAL, 2e5, 1e5, 1e7, -5.0)
    t2 = invert_g_prime(REAL, 2e5, 1e5, 1e7, -1.0)
    assert t1 < t2


def test_invalid_targets():
    with pytest.raises(ValueError, match="target outside range"):
        invert_g_prime(UNIT, 1.0, 1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        invert_g_prime(UNIT, 0.0, 0.0, 1.0, -1.0)


def test_overflow_for_absurd_target():
    with pytest.raises(PowerOverflowError):
        invert_g_prime(REAL, 2e5, 1e5, 1e7, -1.7e308)


def test_single_group_takes_whole_frame():
    inst = small_instance(1, n_users=2)
    ts = solve_time(inst, inst.arrays.R * 0.5)
    assert ts.t[0] == inst.deadline


def test_identical_groups_split_evenly():
    u1, u2 = user(R=3e5, h=2e-11), user(R=2e5, h=1e-12)
    inst = ProblemInstance.build([(u1, u2), (u1, u2)], 1e7, 4e-21, 0.1, 6e9)
    ts = solve_time(inst, np.array([[1e5, 5e4], [1e5, 5e4]]))
    assert ts.t == pytest.approx([0.05, 0.05], rel=1e-12)


def test_asymmetric_stationarity(desk2):
    d = desk2.arrays.D + 0.5 * (desk2.arrays.R - desk2.arrays.D)
    ts = solve_time(desk2, d)
    assert ts.t.sum() == pytest.approx(desk2.deadline, rel=1e-12)
    for i, g in enumerate(desk2.groups):
        assert g_prime(g, d[i, 0], d[i, 1], desk2.bandwidth, ts.t[i]) == pytest.approx(-ts.alpha, rel=1e-8)


def test_budget_decreases_with_price(desk2):
    d = desk2.arrays.R
    prices = [0.01, 0.1, 1.0, 10.0]
    budgets = [time_budget(desk2, d, a) for a in prices]
    assert all(x > y for x, y in zip(budgets, budgets[1:]))


def test_idle_group_gets_no_time(desk2):
    d = desk2.arrays.R.copy()
    d[0] = 0.0
    ts = solve_time(desk2, d)
    assert ts.t[0] == 0.0
    assert ts.t[1] == pytest.approx(desk2.deadline, rel=1e-15)


def test_trail_brackets_converge(desk2):
    ts = solve_time(desk2, desk2.arrays.R)
    assert ts.alpha_trail.size > 0
    assert abs(ts.budget_trail[-1] - desk2.deadline) <= 1e-9 * desk2.deadline
